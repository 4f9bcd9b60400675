"""Contraction mappings and certified fixed-point iteration.

The classical Banach iteration is driven here with a certified stopping rule
instead of a bare step-size heuristic: the orbit is grown in blocks until the
certification module issues a tail diameter certificate at the requested
delta *and* the last step distance falls below the tail threshold.  For a
c-contraction the required shift witness is not searched for -- it is derived
from c, since distances contract by c**p under a shift by p.

Orbits are indexed x_n = f^n(x0) starting at n = 1; the seed x0 itself is not
part of the sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .certificates import CauchyCertificate, CertifyConfig, certify_cauchy
from .errors import ContractionError, SolverError
from .metrics import ETA, DbMetric, Point
from .sequences import SequencePrefix, ShiftWitness, TailConfig

#: Hard cap for the derived shift; beyond this the witness is unsatisfiable.
SHIFT_CAP = 1000


@dataclass(frozen=True)
class Contraction:
    """A self-map with a declared contraction constant c in [0, 1).

    The declared c is metadata, like a metric's declared s: it is verified by
    sampling (see :func:`estimate_contraction_constant`), never trusted
    blindly.  ``sample_low`` / ``sample_high`` bound the box the map is meant
    to contract on, used when sampling verification pairs.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    c: float
    dim: Optional[int] = None
    sample_low: float = 0.0
    sample_high: float = 10.0

    def __post_init__(self):
        if not (0.0 <= self.c < 1.0):
            raise ContractionError(f"declared contraction constant must lie in [0, 1), got {self.c}")

    def apply(self, p: Point) -> Point:
        out = np.asarray(self.fn(p.coords), dtype=float)
        if out.ndim == 0:
            out = out.reshape(1)
        if not np.all(np.isfinite(out)):
            raise ContractionError(f"map {self.name!r} produced non-finite values at {p}")
        return Point(out)


@dataclass(frozen=True)
class Orbit:
    """The prefix x_1 .. x_N of iterates of a contraction from a seed."""

    seed: Point
    contraction: Contraction
    sequence: SequencePrefix

    @property
    def length(self) -> int:
        return len(self.sequence)


def iterate(f: Contraction, x0: Point, n: int, metric: DbMetric) -> Orbit:
    """Generate the orbit prefix x_1 = f(x0), ..., x_n = f^n(x0)."""
    if n < 2:
        raise ValueError("an orbit prefix needs at least 2 iterates")
    pts: list[Point] = []
    cur = x0
    for _ in range(n):
        cur = f.apply(cur)
        pts.append(cur)
    return Orbit(seed=x0, contraction=f, sequence=SequencePrefix(pts, metric))


class ContractionEstimate(NamedTuple):
    ratio: float
    violation: bool
    worst_pair: Optional[tuple[Point, Point]]


def estimate_contraction_constant(
    f: Contraction, metric: DbMetric, pairs: Sequence[tuple[Point, Point]]
) -> ContractionEstimate:
    """Supremum of rho(f x, f y) / rho(x, y) over sampled nondegenerate pairs.

    Pairs at (numerically) zero distance carry no ratio information and are
    skipped; a sample consisting only of such pairs raises ContractionError.
    ``violation`` flags a sup exceeding the declared c beyond tolerance.
    """
    best = 0.0
    worst: Optional[tuple[Point, Point]] = None
    used = 0
    for x, y in pairs:
        base = metric.distance(x, y)
        if base <= ETA:
            continue
        used += 1
        ratio = metric.distance(f.apply(x), f.apply(y)) / base
        if ratio > best:
            best = ratio
            worst = (x, y)
    if used == 0:
        raise ContractionError("all sampled pairs are degenerate (zero base distance)")
    return ContractionEstimate(best, best > f.c + ETA, worst)


def derive_shift(c: float, lam: float, s: float, cap: int = SHIFT_CAP) -> int:
    """Smallest shift p >= 1 with c**p < lam / s - eta.

    For a c-contraction, distances contract by exactly c**p under a shift by
    p, so this p makes any witness (delta, p, lam, n0) hold at every scale
    delta.  The result is minimal by construction: p - 1 does not satisfy the
    inequality (p = 1 trivially so, since c**0 = 1 >= lam / s).
    """
    if not (0.0 <= c):
        raise ValueError(f"contraction constant must be nonnegative, got {c}")
    if c >= 1.0:
        raise ValueError(f"no shift exists for c >= 1, got {c}")
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lam must lie strictly in (0, 1), got {lam}")
    if s < 1.0:
        raise ValueError(f"relaxation constant must be >= 1, got {s}")
    target = lam / s - ETA
    if target <= 0.0:
        raise ContractionError(f"lam / s = {lam / s} is below tolerance: unsatisfiable")
    p = 1
    power = c
    while not (power < target):
        p += 1
        power *= c
        if p > cap:
            raise ContractionError(
                f"required shift exceeds cap {cap} for c={c}, lam={lam}, s={s}: unsatisfiable"
            )
    return p


# ---------------------------------------------------------------------------
# Certified fixed-point iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.5
    n0: int = 1
    block: int = 32
    max_iterations: int = 10_000
    tail: TailConfig = TailConfig()
    certify: CertifyConfig = CertifyConfig()
    verify_pairs: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.block < 1 or self.max_iterations < self.block:
            raise ValueError("need block >= 1 and max_iterations >= block")


@dataclass(frozen=True)
class SolveResult:
    """A certified approximate fixed point.

    ``residual`` is rho(x*, f x*) and ``residual_bound`` the dislocated-safe
    form s * (rho(x*, f x*) + rho(f x*, f x*)); for a genuine metric (s = 1,
    zero self-distance) the two coincide.
    """

    fixed_point: Point
    iterations: int
    certificate: CauchyCertificate
    residual: float
    residual_bound: float
    contraction_ratio: float
    orbit: Orbit

    def to_dict(self) -> dict:
        return {
            "fixed_point": self.fixed_point.tolist(),
            "iterations": self.iterations,
            "certificate": self.certificate.to_dict(),
            "residual": self.residual,
            "residual_bound": self.residual_bound,
            "contraction_ratio": self.contraction_ratio,
        }


def _verification_pairs(
    f: Contraction, metric: DbMetric, rng: np.random.Generator, count: int
) -> list[tuple[Point, Point]]:
    dim = metric.dim if metric.dim is not None else (f.dim or 1)
    a = rng.uniform(f.sample_low, f.sample_high, size=(count, dim))
    b = rng.uniform(f.sample_low, f.sample_high, size=(count, dim))
    return [(Point(a[i]), Point(b[i])) for i in range(count)]


def solve_fixed_point(
    f: Contraction,
    metric: DbMetric,
    x0: Point,
    target_delta: float,
    cfg: SolverConfig = SolverConfig(),
) -> SolveResult:
    """Iterate f from x0 until a certificate at target_delta is issued.

    The contraction hypothesis is verified up front on sampled pairs and
    re-checked along the orbit itself (consecutive step ratios); a violation
    aborts with ContractionError.  The orbit grows in blocks; after each block
    the certificate for the derived witness (target_delta, derived p, lam, n0)
    is attempted.  The method returns as soon as a certificate is issued and
    the last step distance is at most the tail threshold; exhausting the
    iteration budget first raises SolverError.
    """
    if target_delta <= 0.0:
        raise ValueError(f"target delta must be positive, got {target_delta}")
    rng = np.random.default_rng(cfg.seed)
    sample = _verification_pairs(f, metric, rng, cfg.verify_pairs)
    estimate = estimate_contraction_constant(f, metric, sample)
    if estimate.violation:
        raise ContractionError(
            f"sampled contraction ratio {estimate.ratio} exceeds declared c = {f.c} "
            f"at pair {estimate.worst_pair}"
        )

    p = derive_shift(f.c, cfg.lam, metric.s)
    witness = ShiftWitness(delta=target_delta, p=p, lam=cfg.lam, n0=cfg.n0)
    min_len = max(cfg.n0 + p + 2, 4)

    pts: list[Point] = []
    cur = x0
    ratio_seen = estimate.ratio
    while len(pts) < cfg.max_iterations:
        for _ in range(min(cfg.block, cfg.max_iterations - len(pts))):
            cur = f.apply(cur)
            pts.append(cur)
        if len(pts) < min_len:
            continue
        seq = SequencePrefix(pts, metric)

        # Mid-run hypothesis check: consecutive step ratios are image/base
        # ratios of the map, so they must also respect the declared c.
        steps = np.asarray(
            metric.rows(seq.coords_array()[1:], seq.coords_array()[:-1])
        )
        nz = steps[:-1] > ETA
        if np.any(nz):
            ratios = steps[1:][nz] / steps[:-1][nz]
            ratio_seen = max(ratio_seen, float(np.max(ratios)))
            if ratio_seen > f.c + ETA:
                raise ContractionError(
                    f"contraction hypothesis violated mid-run: step ratio {ratio_seen} "
                    f"exceeds declared c = {f.c}"
                )

        outcome = certify_cauchy(seq, witness, cfg.certify)
        last_step = seq.distance(len(pts) - 1, len(pts))
        if outcome.certified and last_step <= cfg.tail.eps:
            x_star = pts[-1]
            fx = f.apply(x_star)
            residual = metric.distance(x_star, fx)
            self_dist = metric.distance(fx, fx)
            return SolveResult(
                fixed_point=x_star,
                iterations=len(pts),
                certificate=outcome.certificate,
                residual=residual,
                residual_bound=metric.s * (residual + self_dist),
                contraction_ratio=ratio_seen,
                orbit=Orbit(seed=x0, contraction=f, sequence=seq),
            )
    raise SolverError(
        f"no certificate at delta = {target_delta} within {cfg.max_iterations} iterations"
    )


# ---------------------------------------------------------------------------
# Registry (CLI contraction sources)
# ---------------------------------------------------------------------------

def halving() -> Contraction:
    """f(x) = x / 2, c = 1/2, any dimension."""
    return Contraction(name="halving", fn=lambda x: x / 2.0, c=0.5, dim=None)


def affine_1d(a: float, b: float = 0.0) -> Contraction:
    """f(x) = a x + b with |a| < 1; c = |a|."""
    a, b = float(a), float(b)
    if not abs(a) < 1.0:
        raise ContractionError(f"affine slope must satisfy |a| < 1, got {a}")
    return Contraction(name="affine_1d", fn=lambda x: a * x + b, c=abs(a), dim=1)


def affine_nd(matrix, offset, c: float) -> Contraction:
    """f(x) = M x + b with declared constant c (verified by sampling).

    The caller is responsible for c matching the operator norm of M; the
    sampled verification will flag a declared c that is too small.
    """
    m = np.asarray(matrix, dtype=float)
    b = np.asarray(offset, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or b.shape != (m.shape[0],):
        raise ContractionError(
            f"need a square matrix and a matching offset, got {m.shape} and {b.shape}"
        )
    return Contraction(name="affine_nd", fn=lambda x: m @ x + b, c=float(c), dim=m.shape[0])


def logistic_damped(r: float = 0.8) -> Contraction:
    """f(x) = r x (1 - x) on [0, 1] with 0 < r < 1; c = r.

    The derivative magnitude r |1 - 2x| is bounded by r on [0, 1], so the map
    contracts there (and only there -- the sampling box is [0, 1]).
    """
    r = float(r)
    if not (0.0 < r < 1.0):
        raise ContractionError(f"damping must satisfy 0 < r < 1, got {r}")
    return Contraction(
        name="logistic_damped",
        fn=lambda x: r * x * (1.0 - x),
        c=r,
        dim=1,
        sample_low=0.0,
        sample_high=1.0,
    )


def constant_map(value) -> Contraction:
    """f == value: the degenerate contraction with c = 0."""
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    return Contraction(name="constant", fn=lambda x: arr.copy(), c=0.0, dim=arr.size)


CONTRACTION_BUILDERS: dict[str, tuple[Callable[..., Contraction], dict[str, str]]] = {
    "halving": (halving, {}),
    "affine_1d": (affine_1d, {"a": "slope, |a| < 1", "b": "intercept (default 0.0)"}),
    "affine_nd": (
        affine_nd,
        {"matrix": "square matrix as nested lists", "offset": "offset vector", "c": "declared constant"},
    ),
    "logistic_damped": (logistic_damped, {"r": "damping, 0 < r < 1 (default 0.8)"}),
    "constant": (constant_map, {"value": "the constant image (scalar or vector)"}),
}


def make_contraction(name: str, **params) -> Contraction:
    if name not in CONTRACTION_BUILDERS:
        raise ContractionError(
            f"unknown contraction {name!r}; available: {sorted(CONTRACTION_BUILDERS)}"
        )
    factory, _ = CONTRACTION_BUILDERS[name]
    return factory(**params)


def available_contractions() -> dict[str, dict[str, str]]:
    return {name: dict(params) for name, (_, params) in CONTRACTION_BUILDERS.items()}
