"""Command-line front end: single bounds, CSV sweeps and self-checks.

Exit codes: 0 success, 1 failed check, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import bounds
from .bounds import BoundResult, ChannelKind, ChannelParams
from .checks import cross_check
from .statefam import Family, extendibility_threshold

WORKERS_ENV = "KEXTBOUNDS_MAX_WORKERS"
TBR_PROXY_K = 10**6
MODES = ("per_k", "best_k", "compare_tbr")
COLUMNS = ["n", "k", "status", "log2M_total", "rate_per_use", "divergence_E",
           "witness_summary"]


class UsageError(Exception):
    pass


@dataclass
class SweepConfig:
    kind: ChannelKind = ChannelKind.DEPOLARIZING
    p: float = 0.15
    eps: float = 0.05
    n_min: int = 1
    n_max: int = 50
    k_list: list = field(default_factory=lambda: list(range(2, 11)) + [TBR_PROXY_K])
    t_grid_size: int = bounds.DEFAULT_T_GRID
    output: str | None = None
    mode: str = "per_k"

    def validate(self):
        try:
            self.kind = ChannelKind(self.kind)
        except ValueError:
            raise UsageError(f"kind must be depolarizing or erasure, got {self.kind!r}")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.n_min < 1:
            raise UsageError(f"n_min must be at least 1, got {self.n_min}")
        if self.n_min > self.n_max:
            raise UsageError(f"n_min ({self.n_min}) exceeds n_max ({self.n_max})")
        if not self.k_list:
            raise UsageError("k_list must not be empty")
        self.k_list = sorted({int(k) for k in self.k_list})
        if any(k < 2 for k in self.k_list):
            raise UsageError("every k must be at least 2")
        if self.t_grid_size < 2:
            raise UsageError("t_grid_size must be at least 2")
        try:
            ChannelParams(self.kind, self.p, self.n_min, self.eps, self.k_list[0])
        except ValueError as e:
            raise UsageError(str(e))
        return self


def _parse_k_list(text):
    try:
        ks = sorted({int(x) for x in str(text).replace(";", ",").split(",") if x.strip()})
    except ValueError:
        raise UsageError(f"k_list must be comma-separated integers, got {text!r}")
    return ks


_CONVERTERS = {"kind": str, "p": float, "eps": float, "n_min": int, "n_max": int,
               "k_list": _parse_k_list, "t_grid_size": int, "output": str, "mode": str}


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment. Keys are SweepConfig fields."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config file: {e}")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONVERTERS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}")
    return out


# --------------------------------------------------------------------------
# formatting

def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def witness_summary(r: BoundResult) -> str:
    w = r.witness
    if w is None:
        return ""
    if isinstance(w, float):
        return f"t={fmt(w)}"
    n = len(w) - 1
    mass = [math.comb(n, v) * float(c) for v, c in enumerate(w)]
    parts = [f"{v}:{fmt(m)}" for v, m in enumerate(mass) if m > 1e-12]
    return "class_mass=" + ";".join(parts)


def result_cells(r: BoundResult) -> list[str]:
    if not r.valid:
        return ["invalid", "", "", "", ""]
    return ["valid", fmt(r.log2M_total), fmt(r.rate_per_use), fmt(r.divergence_E),
            witness_summary(r)]


# --------------------------------------------------------------------------
# sweeps

def _point(task):
    mode, kind, p, eps, n, ks, grid = task
    params = ChannelParams(kind, p, n, eps, ks[0])
    if mode == "per_k":
        r = bounds.channel_bound(params, grid)
        return [[str(n), str(ks[0])] + result_cells(r)]
    best = bounds.best_over_k(params, ks, grid)
    row = [str(n), str(best.k_used) if best.valid else ""] + result_cells(best)
    if mode == "compare_tbr":
        row.append(fmt(bounds.tbr_limit_bound(params, grid).rate_per_use))
    return [row]


def max_workers() -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {cap!r}")
    return n


def run_sweep(config: SweepConfig) -> list[list[str]]:
    """Header plus one row per (n, k), or per n in best_k / compare_tbr mode."""
    config.validate()
    ns = range(config.n_min, config.n_max + 1)
    if config.mode == "per_k":
        tasks = [(config.mode, config.kind, config.p, config.eps, n, (k,), config.t_grid_size)
                 for n in ns for k in config.k_list]
    else:
        tasks = [(config.mode, config.kind, config.p, config.eps, n, tuple(config.k_list),
                  config.t_grid_size) for n in ns]
    header = COLUMNS + (["tbr_rate"] if config.mode == "compare_tbr" else [])
    workers = min(max_workers(), len(tasks))
    if workers <= 1:
        chunks = map(_point, tasks)
        rows = [row for chunk in chunks for row in chunk]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = [row for chunk in pool.map(_point, tasks) for row in chunk]
    return [header] + rows


def to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


# --------------------------------------------------------------------------
# argument handling

def _add_channel_args(sp, k_default=2):
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--k", type=int, default=k_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kextbounds",
        description="Rate bounds for depolarizing and erasure channels assisted "
                    "by k-extendible channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("thresholds", help="k-extendibility thresholds")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--k", type=int, nargs="+", default=[2])

    sp = sub.add_parser("depol", help="depolarizing-channel bound")
    _add_channel_args(sp)
    sp.add_argument("--t-grid-size", "--t_grid_size", dest="t_grid_size", type=int,
                    default=bounds.DEFAULT_T_GRID)

    sp = sub.add_parser("erasure", help="erasure-channel bound")
    _add_channel_args(sp)

    sp = sub.add_parser("adaptive", help="depolarizing bound for adaptive protocols")
    _add_channel_args(sp)

    sp = sub.add_parser("psc", help="pretty strong converse rate")
    sp.add_argument("--eps", type=float, default=0.05)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--k", type=int, default=2)

    sp = sub.add_parser("sweep", help="CSV sweep over n and k")
    sp.add_argument("--config", help="key=value file supplying defaults")
    sp.add_argument("--kind", choices=[c.value for c in ChannelKind])
    sp.add_argument("--p", type=float)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--n-min", "--n_min", dest="n_min", type=int)
    sp.add_argument("--n-max", "--n_max", dest="n_max", type=int)
    sp.add_argument("--k-list", "--k_list", dest="k_list", type=str,
                    help="comma-separated, e.g. 2,3,4")
    sp.add_argument("--t-grid-size", "--t_grid_size", dest="t_grid_size", type=int)
    sp.add_argument("--output", help="CSV path; stdout when omitted")
    sp.add_argument("--mode", choices=MODES)

    sp = sub.add_parser("check", help="run self-checks")
    sp.add_argument("--depth", choices=("quick", "full"), default="quick")
    return parser


def sweep_config(args) -> SweepConfig:
    values = {}
    if args.config:
        values.update(read_config(args.config))
    for f in fields(SweepConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _parse_k_list(v) if f.name == "k_list" else v
    return SweepConfig(**values).validate()


def _bound_rows(r: BoundResult, n: int, k) -> str:
    return to_csv([COLUMNS, [str(n), "" if k is None else str(k)] + result_cells(r)])


def _channel(kind, args):
    try:
        return ChannelParams(kind, args.p, args.n, args.eps, args.k)
    except ValueError as e:
        raise UsageError(str(e))


def dispatch(args, out) -> int:
    cmd = args.command
    if cmd == "thresholds":
        if args.d < 2 or any(k < 2 for k in args.k):
            raise UsageError("d and k must be at least 2")
        rows = [["d", "k", "isotropic", "werner"]]
        for k in args.k:
            rows.append([str(args.d), str(k),
                         fmt(extendibility_threshold(Family.ISOTROPIC, args.d, k)),
                         fmt(extendibility_threshold(Family.WERNER, args.d, k))])
        out.write(to_csv(rows))
    elif cmd == "depol":
        if args.t_grid_size < 2:
            raise UsageError("t_grid_size must be at least 2")
        r = bounds.depolarizing_bound(_channel(ChannelKind.DEPOLARIZING, args), args.t_grid_size)
        out.write(_bound_rows(r, args.n, args.k))
    elif cmd == "erasure":
        r = bounds.erasure_bound(_channel(ChannelKind.ERASURE, args))
        out.write(_bound_rows(r, args.n, args.k))
    elif cmd == "adaptive":
        r = bounds.adaptive_depolarizing_bound(_channel(ChannelKind.DEPOLARIZING, args))
        out.write(_bound_rows(r, args.n, args.k))
    elif cmd == "psc":
        try:
            v = bounds.pretty_strong_converse(args.eps, args.n, args.k)
        except ValueError as e:
            raise UsageError(str(e))
        out.write(to_csv([["eps", "n", "k", "rate_per_use"],
                          [fmt(args.eps), str(args.n), str(args.k), fmt(v)]]))
    elif cmd == "sweep":
        config = sweep_config(args)
        text = to_csv(run_sweep(config))
        if config.output:
            Path(config.output).write_text(text)
        else:
            out.write(text)
    elif cmd == "check":
        report = cross_check(args.depth)
        out.write("\n".join(report.lines()) + "\n")
        return 0 if report.passed else 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args, sys.stdout)
    except UsageError as e:
        print(f"kextbounds: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
