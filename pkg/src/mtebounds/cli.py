"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 some requested identified set is EMPTY
(outputs are still written, with EMPTY markers).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, _kernels
from .analytic import BoundsConfig, IntervalCurve, ate_bounds_numeric, mte_curve
from .inference import BootstrapError, ate_set_ci
from .lp import MtrGrid, lp_mte_bounds
from .moments import (
    InputError,
    InstrumentOrdering,
    estimate_moments,
    read_moments_csv,
    read_sample_csv,
    write_sample_csv,
)
from .propensity import propensity_bounds
from .simulation import DgpSpec, linear_design_spec, compliant_spec, population_moments, simulate, three_valued_spec
from .svgplot import bounds_svg

SCHEMA = "mte-bounds/1"
EXIT_OK, EXIT_INPUT, EXIT_EMPTY = 0, 1, 2
VARIANTS = {"smooth": "smooth", "monotone": "smooth_monotone"}
NAMED_DGPS = {
    "onesided": lambda seed: linear_design_spec("verbatim_onesided", seed=seed),
    "compliant": lambda seed: compliant_spec(seed=seed),
    "three_valued": lambda seed: three_valued_spec(seed=seed),
}


def _float_list(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return vals


def _support(text: str):
    vals = _float_list(text)
    if len(vals) == 2:
        return tuple(vals)
    if len(vals) == 4:
        return (tuple(vals[:2]), tuple(vals[2:]))
    raise argparse.ArgumentTypeError("--support takes lo,hi or y1lo,y1hi,y0lo,y0hi")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtebounds", description="Bounds on marginal treatment effects with a misreported treatment.")
    p.add_argument("--mode", choices=("analytic", "lp", "simulate", "ci"), default="analytic")
    src = p.add_argument_group("data")
    src.add_argument("--input", help="sample CSV with header y,dstar,z")
    src.add_argument("--moments", help="summary CSV with columns z,ey,pdstar[,n]")
    src.add_argument("--population", help="DGP spec JSON; its exact population moments are used")
    src.add_argument("--dgp", choices=sorted(NAMED_DGPS), help="built-in DGP (population moments, or the simulate source)")
    src.add_argument("--z-order", help="instrument labels in ascending propensity order, comma separated")
    b = p.add_argument_group("assumptions")
    b.add_argument("--alpha", type=_float_list, default=[0.0], help="misreporting level(s)")
    b.add_argument("--b", type=_float_list, default=[1.0], help="smoothness constant(s)")
    b.add_argument("--variant", choices=sorted(VARIANTS), default="smooth")
    b.add_argument("--tch", action="store_true", help="treatment cannot hurt (MTE <= 0)")
    b.add_argument("--nonnegative", action="store_true", help="declare MTE >= 0")
    b.add_argument("--support", type=_support, help="outcome support lo,hi (or per arm y1lo,y1hi,y0lo,y0hi)")
    b.add_argument("--case3", choices=("union", "printed"), default="union")
    n = p.add_argument_group("numerics")
    n.add_argument("--grid-n", type=int, default=401)
    n.add_argument("--mean-rule", choices=("trapezoid", "plain"), default="trapezoid")
    n.add_argument("--lp-grid", type=int, default=200, help="cells in the LP response grid")
    n.add_argument("--lp-vstars", type=int, default=21, help="v* points evaluated in LP mode")
    n.add_argument("--p-grid-n", type=int, default=21, help="candidate propensities per instrument value in LP mode")
    n.add_argument("--lp-lipschitz", action="store_true", help="add Lipschitz rows with constant b in LP mode")
    n.add_argument("--level", type=float, default=0.95)
    n.add_argument("--boot-B", type=int, default=199)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--n", type=int, default=5000, help="rows to draw in simulate mode")
    n.add_argument("--jobs", type=int, default=min(8, os.cpu_count() or 1))
    o = p.add_argument_group("output")
    o.add_argument("--out-dir", default=".")
    o.add_argument("--plot", action="store_true", help="also write bounds.svg")
    return p


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _num(x):
    """JSON-safe float: non-finite values become strings."""
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _ordering(args, fallback=None) -> Optional[InstrumentOrdering]:
    if args.z_order:
        return InstrumentOrdering.parse(args.z_order)
    return fallback


def _load_spec(args) -> DgpSpec:
    if args.population:
        try:
            return DgpSpec.from_json(Path(args.population).read_text())
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise InputError(f"{args.population}: not a valid DGP spec ({exc})") from None
    if args.dgp:
        return NAMED_DGPS[args.dgp](args.seed)
    raise InputError("this mode needs --population or --dgp")


def load_data(args):
    """Return ``(moments, sample_or_None, provenance)``."""
    given = [x for x in (args.input, args.moments, args.population, args.dgp) if x]
    if len(given) != 1:
        raise InputError("give exactly one of --input, --moments, --population, --dgp")
    if args.input:
        ordering = _ordering(args)
        if ordering is None:
            raise InputError("--z-order is required with --input (the propensity order is never inferred)")
        sample = read_sample_csv(args.input)
        prov = {"kind": "sample", "path": str(args.input), "sha256": _sha256(args.input), "rows": len(sample)}
        return estimate_moments(sample, ordering), sample, prov
    if args.moments:
        moments = read_moments_csv(args.moments, _ordering(args))
        return moments, None, {"kind": "moments", "path": str(args.moments), "sha256": _sha256(args.moments)}
    spec = _load_spec(args)
    moments = population_moments(spec)
    ordering = _ordering(args)
    if ordering is not None and ordering.labels != moments.labels:
        raise InputError(f"--z-order {ordering.labels} does not match the DGP labels {moments.labels}")
    return moments, None, {"kind": "population", "spec": spec.as_dict()}


@dataclass
class Cell:
    alpha: float
    b: Optional[float]
    curve: IntervalCurve
    ate_lo: float
    ate_hi: float
    ci: Optional[dict] = None

    @property
    def empty(self) -> bool:
        return self.curve.any_empty or not (self.ate_lo <= self.ate_hi)


def _config(args, alpha, b) -> BoundsConfig:
    return BoundsConfig(
        b=b, alpha=alpha, variant=VARIANTS[args.variant], tch=args.tch, nonnegative=args.nonnegative,
        y_support=args.support, grid_n=args.grid_n, case3=args.case3,
    )


def _analytic_cell(args, moments, sample, alpha, b) -> Cell:
    config = _config(args, alpha, b)
    curve = mte_curve(moments, config)
    ate = ate_bounds_numeric(curve, args.mean_rule)
    ci = None
    if args.mode == "ci":
        res = ate_set_ci(sample, moments.ordering, config, B=args.boot_B, seed=args.seed, level=args.level, rule=args.mean_rule)
        ci = {k: _num(v) if isinstance(v, float) else v for k, v in res.as_dict().items()}
    return Cell(alpha, b, curve, ate.lo, ate.hi, ci)


def _lp_cell(args, moments, alpha, b) -> Cell:
    if args.support is None:
        raise InputError("LP mode requires --support")
    grid = MtrGrid(args.lp_grid, args.support)
    pb = propensity_bounds(moments, alpha)
    v = np.linspace(0.0, 1.0, args.lp_vstars)
    lo, hi = np.empty(v.size), np.empty(v.size)
    for g, vs in enumerate(v):
        iv = lp_mte_bounds(moments, pb, vs, grid, args.p_grid_n, b if args.lp_lipschitz else None)
        lo[g], hi[g] = iv.lo, iv.hi
    curve = IntervalCurve(v, lo, hi)
    ate = ate_bounds_numeric(curve, args.mean_rule)
    return Cell(alpha, b if args.lp_lipschitz else None, curve, ate.lo, ate.hi)


def run_cells(args, moments, sample) -> list:
    """Evaluate every (alpha, b) cell; concurrent, returned in sweep order."""
    if args.mode == "lp":
        bs = args.b if args.lp_lipschitz else [None]
        work = [(a, b) for a in args.alpha for b in bs]
        fn = lambda ab: _lp_cell(args, moments, *ab)
    else:
        work = [(a, b) for a in args.alpha for b in args.b]
        fn = lambda ab: _analytic_cell(args, moments, sample, *ab)
    # validate every cell's configuration before starting any work
    for a, b in work:
        _config(args, a, 0.0 if b is None else b)
    if args.jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            return list(pool.map(fn, work))
    return [fn(ab) for ab in work]


def curves_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "b", "vstar", "lb", "ub", "case"])
    for cell in cells:
        labels = cell.curve.case_labels() if cell.b is not None else ["empty" if e else "lp" for e in cell.curve.empty_mask]
        b = "" if cell.b is None else repr(float(cell.b))
        for v, lo, hi, lab in zip(cell.curve.vstars, cell.curve.lo, cell.curve.hi, labels):
            w.writerow([repr(float(cell.alpha)), b, repr(float(v)), repr(float(lo)), repr(float(hi)), lab])
    return buf.getvalue()


def read_curves_csv(path) -> dict:
    """Parse ``mte_bounds.csv`` back into ``{(alpha, b): IntervalCurve}``."""
    groups = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (float(row["alpha"]), float(row["b"]) if row["b"] else None)
            groups.setdefault(key, []).append((float(row["vstar"]), float(row["lb"]), float(row["ub"])))
    return {k: IntervalCurve(*map(np.array, zip(*rows))) for k, rows in groups.items()}


def report(args, cells, moments, provenance) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "jobs"}
    return {
        "schema": SCHEMA,
        "version": __version__,
        "backend": _kernels.backend(),
        "config": cfg,
        "provenance": provenance,
        "moments": moments.as_dict(),
        "grids": {
            "vstar_points": args.lp_vstars if args.mode == "lp" else args.grid_n,
            "lp_cells": args.lp_grid if args.mode == "lp" else None,
            "p_grid_n": args.p_grid_n if args.mode == "lp" else None,
        },
        "cells": [
            {
                "alpha": c.alpha,
                "b": c.b,
                "empty": c.empty,
                "ate": None if not (c.ate_lo <= c.ate_hi) else {"lo": _num(c.ate_lo), "hi": _num(c.ate_hi)},
                "ci": c.ci,
            }
            for c in cells
        ],
    }


def _plot(args, cells, out: Path):
    config = _config(args, 0.0, 0.0)
    lo, hi = config.effect_range()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        finite = np.concatenate([np.r_[c.curve.lo, c.curve.hi] for c in cells])
        finite = finite[np.isfinite(finite)]
        lo, hi = (finite.min(), finite.max()) if finite.size else (-1.0, 1.0)
        if lo == hi:
            lo, hi = lo - 1, hi + 1
    series = [(f"a={c.alpha:g}" + ("" if c.b is None else f", b={c.b:g}"), c.curve.vstars, c.curve.lo, c.curve.hi) for c in cells]
    _atomic_write(out / "bounds.svg", bounds_svg(series, (lo, hi), title=f"MTE bounds ({args.mode})"))


def _simulate(args, out: Path) -> int:
    spec = _load_spec(args)
    sample = simulate(spec, args.n, seed=args.seed, n_jobs=args.jobs)
    write_sample_csv(sample, out / "sample.csv")
    _atomic_write(out / "dgp.json", spec.to_json() + "\n")
    print(f"wrote {len(sample)} rows from {spec.name} to {out / 'sample.csv'}")
    return EXIT_OK


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.mode == "simulate":
            return _simulate(args, out)
        if args.mode == "ci" and not args.input:
            raise InputError("ci mode needs a row-level sample via --input")
        if args.grid_n < 3 or args.boot_B < 2 or args.lp_vstars < 2:
            raise InputError("--grid-n must be >= 3, --boot-B >= 2 and --lp-vstars >= 2")
        moments, sample, prov = load_data(args)
        cells = run_cells(args, moments, sample)
    except (InputError, BootstrapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _atomic_write(out / "mte_bounds.csv", curves_csv(cells))
    _atomic_write(out / "ate_bounds.json", json.dumps(report(args, cells, moments, prov), indent=2, allow_nan=False) + "\n")
    if args.plot:
        _plot(args, cells, out)
    for c in cells:
        tag = "EMPTY" if c.empty else f"[{c.ate_lo:.4f}, {c.ate_hi:.4f}]"
        print(f"alpha={c.alpha:g} b={'-' if c.b is None else f'{c.b:g}'} ATE {tag}")
    return EXIT_EMPTY if any(c.empty for c in cells) else EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
