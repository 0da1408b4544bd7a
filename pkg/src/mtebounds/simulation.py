"""Data-generating processes with closed-form population oracles.

A spec fixes piecewise-linear treatment responses ``m1(v), m0(v)``, a discrete
instrument with known propensities ``p(z)``, and a misreporting rule. The
latent resistance ``V`` is uniform on (0, 1), ``D = 1{p(Z) >= V}`` and
``Y = m1(V) D + m0(V) (1 - D)`` plus optional mean-zero noise.

Misreporting modes:

``none``
    ``D* = D``.
``verbatim_onesided``
    ``D* = D (1 - eps)``: only treated units can misreport.
``full_flip``
    ``D* = D (1 - eps) + (1 - D) eps``.

``eps`` is either ``1{V <= c}`` (``eps_rule="threshold"``) or an independent
Bernoulli(``c``) draw (``eps_rule="independent"``). Under ``full_flip`` both
rules make ``P(eps = 1 | Z = z) = c`` for every z.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .moments import InputError, InstrumentOrdering, MomentTable, Sample

MISREPORT_MODES = ("none", "verbatim_onesided", "full_flip")
EPS_RULES = ("threshold", "independent")


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function on [0, 1] through ``(knots, values)``."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        k = np.asarray(self.knots, float)
        v = np.asarray(self.values, float)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise InputError("knots and values must be 1-d of equal length >= 2")
        if k[0] != 0.0 or k[-1] != 1.0 or not (np.diff(k) > 0).all():
            raise InputError("knots must increase strictly from 0 to 1")
        object.__setattr__(self, "knots", tuple(k.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @classmethod
    def linear(cls, intercept: float, slope: float) -> "PiecewiseLinear":
        return cls((0.0, 1.0), (intercept, intercept + slope))

    def __call__(self, v):
        return np.interp(v, self.knots, self.values)

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.knots))))

    def integral(self, a: float, b: float) -> float:
        """Exact integral over [a, b] (a <= b, both in [0, 1])."""
        if a > b:
            return -self.integral(b, a)
        pts = np.concatenate([[a], [k for k in self.knots if a < k < b], [b]])
        vals = self(pts)
        return float(np.sum((vals[1:] + vals[:-1]) / 2 * np.diff(pts)))

    def as_dict(self) -> dict:
        return {"knots": list(self.knots), "values": list(self.values)}


@dataclass(frozen=True)
class DgpSpec:
    m1: PiecewiseLinear
    m0: PiecewiseLinear
    z_values: tuple
    z_probs: tuple
    misreport: str = "full_flip"
    eps_rule: str = "threshold"
    eps_param: float = 0.15
    noise_sd: float = 0.0
    seed: int = 0
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        z = tuple(float(x) for x in self.z_values)
        pr = tuple(float(x) for x in self.z_probs)
        object.__setattr__(self, "z_values", z)
        object.__setattr__(self, "z_probs", pr)
        if len(z) < 2 or len(z) != len(pr):
            raise InputError("need at least two instrument values with one probability each")
        if not all(0.0 < p < 1.0 for p in z):
            raise InputError("propensities must lie in (0, 1)")
        if not all(b > a for a, b in zip(z, z[1:])):
            raise InputError("instrument values must be listed in increasing propensity order")
        if abs(sum(pr) - 1.0) > 1e-12 or min(pr) <= 0:
            raise InputError("instrument probabilities must be positive and sum to 1")
        if self.misreport not in MISREPORT_MODES:
            raise InputError(f"misreport must be one of {MISREPORT_MODES}")
        if self.eps_rule not in EPS_RULES:
            raise InputError(f"eps_rule must be one of {EPS_RULES}")
        if not 0.0 <= self.eps_param < 0.5:
            raise InputError("misreporting parameter must lie in [0, 0.5)")
        if self.noise_sd < 0:
            raise InputError("noise_sd must be nonnegative")

    @property
    def labels(self) -> tuple:
        return tuple(format(z, "g") for z in self.z_values)

    @property
    def ordering(self) -> InstrumentOrdering:
        return InstrumentOrdering(self.labels)

    @property
    def p_of_z(self) -> dict:
        # the instrument value is the propensity score
        return dict(zip(self.labels, self.z_values))

    @property
    def alpha(self) -> float:
        """P(eps = 1); zero when nothing is misreported."""
        return 0.0 if self.misreport == "none" else self.eps_param

    @property
    def lipschitz(self) -> float:
        return max(self.m1.lipschitz, self.m0.lipschitz)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "m1": self.m1.as_dict(),
            "m0": self.m0.as_dict(),
            "z_values": list(self.z_values),
            "z_probs": list(self.z_probs),
            "misreport": self.misreport,
            "eps_rule": self.eps_rule,
            "eps_param": self.eps_param,
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        d = dict(d)
        d["m1"] = PiecewiseLinear(**d["m1"])
        d["m0"] = PiecewiseLinear(**d["m0"])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "DgpSpec":
        return cls.from_dict(json.loads(text))


def linear_design_spec(misreport: str = "verbatim_onesided", z_values=(0.1, 0.7), seed: int = 0) -> DgpSpec:
    """``Y = D V + (1 - D) V / 4`` with ``eps = 1{V <= 0.15}`` and ``p(z) = z``.

    ``misreport="verbatim_onesided"`` is the design as usually stated;
    ``"full_flip"`` is the variant that fits the flip measurement model.
    """
    k = len(z_values)
    return DgpSpec(
        m1=PiecewiseLinear.linear(0.0, 1.0),
        m0=PiecewiseLinear.linear(0.0, 0.25),
        z_values=tuple(z_values),
        z_probs=tuple([1.0 / k] * k),
        misreport=misreport,
        eps_rule="threshold",
        eps_param=0.15,
        seed=seed,
        name=f"linear_{misreport}",
    )


def compliant_spec(seed: int = 0) -> DgpSpec:
    return linear_design_spec("full_flip", seed=seed)


def three_valued_spec(misreport: str = "full_flip", seed: int = 0) -> DgpSpec:
    return linear_design_spec(misreport, z_values=(0.1, 0.4, 0.7), seed=seed)


def random_spec(rng: np.random.Generator, b_max: float = 2.0, max_k: int = 4) -> DgpSpec:
    """A random full-flip spec for fuzzing; responses are Lipschitz with constant <= b_max."""
    k = int(rng.integers(2, max_k + 1))
    z = np.sort(rng.uniform(0.02, 0.98, size=k))
    while (np.diff(z) < 0.02).any():
        z = np.sort(rng.uniform(0.02, 0.98, size=k))
    probs = rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k

    def response():
        nk = int(rng.integers(0, 3))
        knots = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, nk)), [1.0]])
        slopes = rng.uniform(-b_max, b_max, size=knots.size - 1)
        start = rng.uniform(-1, 1)
        vals = start + np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
        return PiecewiseLinear(tuple(knots), tuple(vals))

    return DgpSpec(
        m1=response(),
        m0=response(),
        z_values=tuple(z),
        z_probs=tuple(probs[:-1]) + (1.0 - probs[:-1].sum(),),
        misreport="full_flip",
        eps_rule=str(rng.choice(EPS_RULES)),
        eps_param=float(rng.uniform(0.0, 0.3)),
        seed=int(rng.integers(0, 2**31)),
        name="random",
    )


def _dstar_share(spec: DgpSpec, p: float) -> float:
    c = spec.eps_param
    if spec.misreport == "none":
        return p
    if spec.eps_rule == "independent":
        if spec.misreport == "verbatim_onesided":
            return p * (1 - c)
        return p * (1 - c) + (1 - p) * c
    if spec.misreport == "verbatim_onesided":
        return max(0.0, p - c)
    return abs(p - c)


def population_moments(spec: DgpSpec) -> MomentTable:
    """Exact E[Y|Z=z] and P(D*=1|Z=z); ``n`` holds the instrument probabilities."""
    ey = [spec.m1.integral(0.0, p) + spec.m0.integral(p, 1.0) for p in spec.z_values]
    pd = [_dstar_share(spec, p) for p in spec.z_values]
    return MomentTable(spec.labels, np.array(ey), np.array(pd), np.array(spec.z_probs))


def misreport_rate(spec: DgpSpec, z_label) -> float:
    """P(eps = 1 | Z = z) among the units whose report can actually flip."""
    p = spec.p_of_z[str(z_label)]
    c = spec.eps_param
    if spec.misreport == "none":
        return 0.0
    if spec.misreport == "full_flip":
        return c
    # one-sided: eps only bites for treated units
    return c * p if spec.eps_rule == "independent" else min(p, c)


def true_mte(spec: DgpSpec, v):
    return spec.m1(v) - spec.m0(v)


def true_ate(spec: DgpSpec) -> float:
    return spec.m1.integral(0.0, 1.0) - spec.m0.integral(0.0, 1.0)


def true_late(spec: DgpSpec, z_hi, z_lo) -> float:
    hi, lo = spec.p_of_z[str(z_hi)], spec.p_of_z[str(z_lo)]
    return (spec.m1.integral(lo, hi) - spec.m0.integral(lo, hi)) / (hi - lo)


SIM_BLOCK = 65536


def _simulate_block(spec: DgpSpec, seed: int, block: int, size: int):
    """Draws for observations ``block * SIM_BLOCK`` onward; depends only on (seed, block)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    # full-size draws keep each observation independent of n
    zi = rng.choice(len(spec.z_values), size=SIM_BLOCK, p=np.array(spec.z_probs))[:size]
    v = rng.uniform(0.0, 1.0, size=SIM_BLOCK)[:size]
    p = np.array(spec.z_values)[zi]
    d = (p >= v).astype(np.int8)
    if spec.eps_rule == "threshold":
        eps = (v <= spec.eps_param).astype(np.int8)
    else:
        eps = (rng.uniform(size=SIM_BLOCK)[:size] < spec.eps_param).astype(np.int8)
    if spec.misreport == "none":
        dstar = d
    elif spec.misreport == "verbatim_onesided":
        dstar = d * (1 - eps)
    else:
        dstar = d * (1 - eps) + (1 - d) * eps
    y = np.where(d == 1, spec.m1(v), spec.m0(v))
    if spec.noise_sd > 0:
        y = y + rng.normal(0.0, spec.noise_sd, size=SIM_BLOCK)[:size]
    return zi, y, dstar.astype(np.int8)


def simulate(spec: DgpSpec, n: int, seed=None, n_jobs: int = 1) -> Sample:
    """``n`` independent draws from ``spec`` (seeded by ``seed`` or ``spec.seed``).

    Observations come in fixed-size blocks, each seeded from the master seed
    and its block index, so the first ``m`` draws do not depend on ``n`` and
    ``n_jobs > 1`` reproduces the sequential output exactly.
    """
    if n < 0:
        raise InputError("n must be nonnegative")
    seed = spec.seed if seed is None else seed
    sizes = [min(SIM_BLOCK, n - start) for start in range(0, n, SIM_BLOCK)]

    def one(block):
        return _simulate_block(spec, seed, block, sizes[block])

    if n_jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(b) for b in range(len(sizes))]
    labels = np.array(spec.labels)
    if not parts:
        return Sample(np.empty(0), np.empty(0, np.int8), labels[:0])
    zi, y, dstar = (np.concatenate(x) for x in zip(*parts))
    return Sample(y, dstar, labels[zi])
