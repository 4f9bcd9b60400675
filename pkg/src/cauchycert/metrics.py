"""Dislocated b-metric instances and sampled axiom checking.

A dislocated b-metric is a symmetric, nonnegative distance function where
``rho(x, y) = 0`` forces ``x = y`` (but ``rho(x, x)`` may be positive) and the
triangle inequality holds up to a relaxation factor ``s >= 1``:

    rho(x, z) <= s * (rho(x, y) + rho(y, z)).

The declared ``s`` is user-supplied metadata; checkers compare sampled
behaviour against it and never mutate it.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import MetricError, TriangleViolation

#: Comparison tolerance used for every equality / strictness test on distances.
ETA = 1e-9


class Point:
    """A point of the ground set: a fixed-length vector of finite reals.

    Scalars are accepted and stored as 1-vectors.  Coordinates are frozen at
    construction and non-finite components are rejected.
    """

    __slots__ = ("coords",)

    def __init__(self, value):
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim != 1 or arr.size == 0:
            raise MetricError(
                f"a point must be a scalar or a nonempty 1-d vector, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise MetricError(f"point has non-finite components: {arr.tolist()}")
        arr = arr.copy()
        arr.setflags(write=False)
        self.coords = arr

    @property
    def dim(self) -> int:
        return self.coords.size

    def close_to(self, other: "Point", tol: float = ETA) -> bool:
        """Componentwise agreement within ``tol``."""
        if self.dim != other.dim:
            return False
        return bool(np.max(np.abs(self.coords - other.coords)) <= tol)

    def tolist(self) -> list[float]:
        return self.coords.tolist()

    def __eq__(self, other) -> bool:
        return isinstance(other, Point) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self) -> str:
        if self.dim == 1:
            return f"Point({self.coords[0]!r})"
        return f"Point({self.coords.tolist()!r})"


@dataclass(frozen=True)
class DbMetric:
    """A distance oracle together with its declared relaxation constant.

    Parameters
    ----------
    name : str
        Registry identifier.
    s : float
        Declared triangle relaxation constant, ``s >= 1``.
    fn : callable
        Maps two coordinate vectors to a distance.
    dim : int or None
        Required point dimension; ``None`` accepts any dimension.
    zero_self_distance : bool
        Instance is declared to satisfy ``rho(x, x) = 0`` (the b-metric
        convention).  Dislocated instances leave this False, and only
        declared instances are held to the converse check.
    rows_fn : callable, optional
        Vectorized form: maps two aligned ``(k, d)`` stacks to ``k``
        distances.  Purely an evaluation shortcut; must agree with ``fn``.
    """

    name: str
    s: float
    fn: Callable[[np.ndarray, np.ndarray], float]
    dim: Optional[int] = None
    zero_self_distance: bool = False
    rows_fn: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not (isinstance(self.s, (int, float)) and math.isfinite(self.s) and self.s >= 1.0):
            raise MetricError(f"relaxation constant must be a finite real >= 1, got {self.s!r}")

    def _check_point(self, p: Point) -> None:
        if self.dim is not None and p.dim != self.dim:
            raise MetricError(
                f"metric {self.name!r} expects dimension {self.dim}, got point of dimension {p.dim}"
            )

    def distance(self, x: Point, y: Point) -> float:
        """Validated distance evaluation.

        Rejects dimension mismatches and evaluations that produce NaN or a
        negative value.  Negative round-off within the comparison tolerance is
        clamped to zero.
        """
        self._check_point(x)
        self._check_point(y)
        if x.dim != y.dim:
            raise MetricError(f"dimension mismatch: {x.dim} vs {y.dim}")
        value = float(self.fn(x.coords, y.coords))
        return self._validate(value)

    def _validate(self, value: float) -> float:
        if math.isnan(value):
            raise MetricError(f"metric {self.name!r} produced NaN")
        if value < 0.0:
            if value < -ETA:
                raise MetricError(f"metric {self.name!r} produced a negative distance {value}")
            return 0.0
        return value

    def rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Distances between aligned rows of two ``(k, d)`` stacks."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        if self.rows_fn is not None:
            out = np.asarray(self.rows_fn(a, b), dtype=float)
        else:
            out = np.array([self.fn(a[i], b[i]) for i in range(a.shape[0])], dtype=float)
        if np.any(np.isnan(out)):
            raise MetricError(f"metric {self.name!r} produced NaN")
        if np.any(out < -ETA):
            raise MetricError(f"metric {self.name!r} produced a negative distance")
        return np.clip(out, 0.0, None)

    def matrix(self, coords: np.ndarray) -> np.ndarray:
        """All-pairs distance matrix for an ``(N, d)`` coordinate stack."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        n = coords.shape[0]
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        flat = self.rows(coords[ii.ravel()], coords[jj.ravel()])
        return flat.reshape(n, n)


# ---------------------------------------------------------------------------
# Built-in instances
# ---------------------------------------------------------------------------

def euclid_1d() -> DbMetric:
    """Absolute difference on the reals (genuine metric, s = 1)."""
    return DbMetric(
        name="euclid_1d",
        s=1.0,
        fn=lambda x, y: abs(float(x[0]) - float(y[0])),
        dim=1,
        zero_self_distance=True,
        rows_fn=lambda a, b: np.abs(a[:, 0] - b[:, 0]),
    )


def euclid_nd() -> DbMetric:
    """Euclidean norm distance in any dimension (genuine metric, s = 1)."""
    return DbMetric(
        name="euclid_nd",
        s=1.0,
        fn=lambda x, y: float(np.linalg.norm(x - y)),
        dim=None,
        zero_self_distance=True,
        rows_fn=lambda a, b: np.linalg.norm(a - b, axis=1),
    )


def sq_abs() -> DbMetric:
    """Squared difference on the reals: a b-metric with s = 2, not a metric."""
    return DbMetric(
        name="sq_abs",
        s=2.0,
        fn=lambda x, y: (float(x[0]) - float(y[0])) ** 2,
        dim=1,
        zero_self_distance=True,
        rows_fn=lambda a, b: (a[:, 0] - b[:, 0]) ** 2,
    )


def max_dislocated() -> DbMetric:
    """rho(x, y) = max(x, y) on the nonnegative reals.

    Self-distance rho(x, x) = x is positive away from zero, which is what
    makes the instance dislocated; s = 1.
    """
    return DbMetric(
        name="max_dislocated",
        s=1.0,
        fn=lambda x, y: max(float(x[0]), float(y[0])),
        dim=1,
        rows_fn=lambda a, b: np.maximum(a[:, 0], b[:, 0]),
    )


def shifted_dislocated(offset: float = 1.0) -> DbMetric:
    """rho(x, y) = |x - y| + offset with offset > 0: uniformly dislocated, s = 1."""
    offset = float(offset)
    if not (math.isfinite(offset) and offset > 0.0):
        raise MetricError(f"shift offset must be a positive real, got {offset!r}")
    return DbMetric(
        name="shifted_dislocated",
        s=1.0,
        fn=lambda x, y: abs(float(x[0]) - float(y[0])) + offset,
        dim=1,
        rows_fn=lambda a, b: np.abs(a[:, 0] - b[:, 0]) + offset,
    )


def broken_asym() -> DbMetric:
    """rho(x, y) = max(x - y, 0): deliberately asymmetric, for negative tests."""
    return DbMetric(
        name="broken_asym",
        s=1.0,
        fn=lambda x, y: max(float(x[0]) - float(y[0]), 0.0),
        dim=1,
        rows_fn=lambda a, b: np.maximum(a[:, 0] - b[:, 0], 0.0),
    )


#: name -> (factory, parameter documentation) for the CLI registry.
METRIC_BUILDERS: dict[str, tuple[Callable[..., DbMetric], dict[str, str]]] = {
    "euclid_1d": (euclid_1d, {}),
    "euclid_nd": (euclid_nd, {}),
    "sq_abs": (sq_abs, {}),
    "max_dislocated": (max_dislocated, {}),
    "shifted_dislocated": (shifted_dislocated, {"offset": "positive shift added to |x - y| (default 1.0)"}),
    "broken_asym": (broken_asym, {}),
}


def make_metric(name: str, s: Optional[float] = None, **params) -> DbMetric:
    """Build a registered metric, optionally overriding the declared ``s``."""
    if name not in METRIC_BUILDERS:
        raise MetricError(f"unknown metric {name!r}; available: {sorted(METRIC_BUILDERS)}")
    factory, _ = METRIC_BUILDERS[name]
    metric = factory(**params)
    if s is not None:
        metric = dataclasses.replace(metric, s=float(s))
    return metric


def available_metrics() -> dict[str, dict[str, str]]:
    return {name: dict(params) for name, (_, params) in METRIC_BUILDERS.items()}


# ---------------------------------------------------------------------------
# Sampled axiom checks
# ---------------------------------------------------------------------------

class PairCheck(NamedTuple):
    ok: bool
    counterexample: Optional[tuple[Point, Point]]


class TriangleEstimate(NamedTuple):
    min_s: float
    worst: Optional[tuple[Point, Point, Point]]


def check_symmetry(metric: DbMetric, pairs: Sequence[tuple[Point, Point]]) -> PairCheck:
    """Require |rho(x, y) - rho(y, x)| <= tolerance on every sampled pair.

    Returns the first failing pair in sample order, so a reported
    counterexample is reproducible by re-evaluating both orientations.
    """
    if not pairs:
        raise ValueError("a nonempty pair sample is required")
    for x, y in pairs:
        if abs(metric.distance(x, y) - metric.distance(y, x)) > ETA:
            return PairCheck(False, (x, y))
    return PairCheck(True, None)


def check_zero_identity(metric: DbMetric, pairs: Sequence[tuple[Point, Point]]) -> PairCheck:
    """Pairs at (numerically) zero distance must be componentwise equal."""
    if not pairs:
        raise ValueError("a nonempty pair sample is required")
    for x, y in pairs:
        if metric.distance(x, y) <= ETA and not x.close_to(y):
            return PairCheck(False, (x, y))
    return PairCheck(True, None)


def check_self_distance_zero(metric: DbMetric, points: Sequence[Point]) -> PairCheck:
    """Converse check for declared b-metric instances: rho(x, x) = 0."""
    if not points:
        raise ValueError("a nonempty point sample is required")
    for x in points:
        if metric.distance(x, x) > ETA:
            return PairCheck(False, (x, x))
    return PairCheck(True, None)


def estimate_minimal_s(
    metric: DbMetric, triples: Sequence[tuple[Point, Point, Point]]
) -> TriangleEstimate:
    """Supremum of rho(x, z) / (rho(x, y) + rho(y, z)) over the sample.

    This is exhaustive brute force over the given triples, so the estimate
    never exceeds the true sampled supremum.  Triples whose two legs sum to
    (numerically) zero are skipped, unless the direct distance is positive --
    that violates the relaxed triangle inequality for every s and raises
    :class:`TriangleViolation`.
    """
    if not triples:
        raise ValueError("a nonempty triple sample is required")
    best = 0.0
    worst: Optional[tuple[Point, Point, Point]] = None
    for x, y, z in triples:
        legs = metric.distance(x, y) + metric.distance(y, z)
        direct = metric.distance(x, z)
        if legs <= ETA:
            if direct > ETA:
                raise TriangleViolation(
                    f"rho(x, z) = {direct} with both legs zero: no s can hold",
                    triple=(x, y, z),
                )
            continue
        ratio = direct / legs
        if ratio > best:
            best = ratio
            worst = (x, y, z)
    return TriangleEstimate(best, worst)


# ---------------------------------------------------------------------------
# Deterministic sampling and the aggregate report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    """Grid-plus-seeded-uniform sampling over a box (default [0, 10] per axis)."""

    pair_count: int = 200
    triple_count: int = 200
    seed: int = 0
    box_low: float = 0.0
    box_high: float = 10.0
    grid_points: int = 11

    def __post_init__(self):
        if self.box_high <= self.box_low:
            raise ValueError("sampling box must have positive width")
        if self.pair_count < 1 or self.triple_count < 1:
            raise ValueError("sample counts must be positive")
        if self.grid_points < 2:
            raise ValueError("need at least two grid points per axis")


def _rng_points(rng: np.random.Generator, cfg: SamplerConfig, dim: int, count: int) -> np.ndarray:
    # Draws are snapped to dyadic rationals (multiples of 2**-20) so that
    # differences, midpoints and their squares are exact in double precision.
    # Without this, a midpoint triple can push a triangle ratio past its true
    # supremum by a few ulps, which matters when the estimate is compared
    # against the declared s at tight tolerance.
    raw = rng.uniform(cfg.box_low, cfg.box_high, size=(count, dim))
    return np.round(raw * 2.0**20) / 2.0**20


def sample_pairs(cfg: SamplerConfig, dim: int) -> list[tuple[Point, Point]]:
    """Sampled pairs: 1-d grid pairs (when dim == 1), identical pairs, uniform draws."""
    rng = np.random.default_rng(cfg.seed)
    pairs: list[tuple[Point, Point]] = []
    if dim == 1:
        grid = np.linspace(cfg.box_low, cfg.box_high, cfg.grid_points)
        for a in grid:
            for b in grid:
                pairs.append((Point(a), Point(b)))
    a = _rng_points(rng, cfg, dim, cfg.pair_count)
    b = _rng_points(rng, cfg, dim, cfg.pair_count)
    pairs.extend((Point(a[i]), Point(b[i])) for i in range(cfg.pair_count))
    # Identical pairs exercise self-distances explicitly.
    c = _rng_points(rng, cfg, dim, max(cfg.pair_count // 8, 4))
    pairs.extend((Point(row), Point(row)) for row in c)
    return pairs


def sample_triples(cfg: SamplerConfig, dim: int) -> list[tuple[Point, Point, Point]]:
    """Sampled triples, always including equispaced (x, midpoint, z) triples.

    The midpoint triples matter: for quadratic-type instances they are the
    maximizers of the triangle ratio, so omitting them systematically
    underestimates the minimal s.
    """
    rng = np.random.default_rng(cfg.seed + 1)
    triples: list[tuple[Point, Point, Point]] = []
    if dim == 1:
        grid = np.linspace(cfg.box_low, cfg.box_high, cfg.grid_points)
        for a in grid:
            for b in grid:
                for c in grid:
                    triples.append((Point(a), Point(b), Point(c)))
        for a in grid:
            for b in grid:
                triples.append((Point(a), Point((a + b) / 2.0), Point(b)))
    x = _rng_points(rng, cfg, dim, cfg.triple_count)
    y = _rng_points(rng, cfg, dim, cfg.triple_count)
    z = _rng_points(rng, cfg, dim, cfg.triple_count)
    triples.extend(
        (Point(x[i]), Point(y[i]), Point(z[i])) for i in range(cfg.triple_count)
    )
    mids = (x + z) / 2.0
    triples.extend(
        (Point(x[i]), Point(mids[i]), Point(z[i])) for i in range(cfg.triple_count)
    )
    return triples


def _point_json(p: Optional[Point]):
    return None if p is None else p.tolist()


@dataclass(frozen=True)
class AxiomReport:
    """Aggregate result of the sampled axiom checks for one metric instance."""

    metric_name: str
    declared_s: float
    symmetry_ok: bool
    zero_identity_ok: bool
    triangle_ok: bool
    estimated_min_s: float
    symmetry_counterexample: Optional[tuple[Point, Point]]
    zero_identity_counterexample: Optional[tuple[Point, Point]]
    violating_triple: Optional[tuple[Point, Point, Point]]
    self_distance_zero_ok: Optional[bool]
    samples_used: int
    seed: int

    @property
    def all_ok(self) -> bool:
        converse = self.self_distance_zero_ok in (None, True)
        return self.symmetry_ok and self.zero_identity_ok and self.triangle_ok and converse

    def to_dict(self) -> dict:
        return {
            "metric": self.metric_name,
            "declared_s": self.declared_s,
            "symmetry_ok": self.symmetry_ok,
            "zero_identity_ok": self.zero_identity_ok,
            "triangle_ok": self.triangle_ok,
            "estimated_min_s": self.estimated_min_s,
            "symmetry_counterexample": (
                None
                if self.symmetry_counterexample is None
                else [_point_json(p) for p in self.symmetry_counterexample]
            ),
            "zero_identity_counterexample": (
                None
                if self.zero_identity_counterexample is None
                else [_point_json(p) for p in self.zero_identity_counterexample]
            ),
            "violating_triple": (
                None
                if self.violating_triple is None
                else [_point_json(p) for p in self.violating_triple]
            ),
            "self_distance_zero_ok": self.self_distance_zero_ok,
            "samples_used": self.samples_used,
            "seed": self.seed,
            "all_ok": self.all_ok,
        }


def run_axiom_report(metric: DbMetric, cfg: SamplerConfig = SamplerConfig()) -> AxiomReport:
    """Run all sampled axiom checks with a deterministic sample.

    The same metric, configuration and seed always produce a bit-identical
    report.  ``triangle_ok`` is true exactly when the estimated minimal s does
    not exceed the declared s (within tolerance); the violating triple is the
    sampled maximizer when it does, or the unconditional violation when the
    relaxed inequality fails outright.
    """
    dim = metric.dim if metric.dim is not None else 1
    pairs = sample_pairs(cfg, dim)
    triples = sample_triples(cfg, dim)

    symmetry = check_symmetry(metric, pairs)
    zero_identity = check_zero_identity(metric, pairs)

    violating: Optional[tuple[Point, Point, Point]] = None
    try:
        estimate = estimate_minimal_s(metric, triples)
        min_s = estimate.min_s
        triangle_ok = min_s <= metric.s + ETA
        if not triangle_ok:
            violating = estimate.worst
    except TriangleViolation as exc:
        min_s = math.inf
        triangle_ok = False
        violating = exc.triple

    converse: Optional[bool] = None
    if metric.zero_self_distance:
        points = [x for x, _ in pairs[: max(len(pairs) // 4, 8)]]
        converse = check_self_distance_zero(metric, points).ok

    return AxiomReport(
        metric_name=metric.name,
        declared_s=metric.s,
        symmetry_ok=symmetry.ok,
        zero_identity_ok=zero_identity.ok,
        triangle_ok=triangle_ok,
        estimated_min_s=min_s,
        symmetry_counterexample=symmetry.counterexample,
        zero_identity_counterexample=zero_identity.counterexample,
        violating_triple=violating,
        self_distance_zero_ok=converse,
        samples_used=len(pairs) + len(triples),
        seed=cfg.seed,
    )
