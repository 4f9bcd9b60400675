"""Finite sequence prefixes and the two finite-prefix Cauchy conditions.

A prefix x_1 .. x_N is scanned for two mechanically checkable conditions:

* consecutive decay -- the step distances rho(x_{n+1}, x_n) become small over
  a trailing window;
* shift contraction -- whenever a pair sits strictly inside the band
  (0, delta), shifting both indices by p contracts its distance below
  delta * lam / s, beyond a cutoff n0.

Together (and only together: a witness can hold vacuously) these imply a
certified diameter bound for the whole tail, which the certification module
replays step by step.  Indices are 1-based everywhere in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PrefixTooShort
from .metrics import ETA, DbMetric, Point


@dataclass(frozen=True)
class TailConfig:
    """Trailing-window configuration for the consecutive-decay check.

    The window starts at step index ceil(tau * (N - 1)); a prefix passes when
    every step distance in the window is at most ``eps``.
    """

    tau: float = 0.5
    eps: float = 1e-6

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.eps < 0.0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")


@dataclass(frozen=True)
class ShiftWitness:
    """Parameters instantiating the shift-contraction condition.

    ``delta`` is the distance band, ``p`` the index shift, ``lam`` the
    contraction factor (0 < lam < 1) and ``n0`` the cutoff below which pairs
    are ignored.
    """

    delta: float
    p: int
    lam: float
    n0: int

    def __post_init__(self):
        if not (isinstance(self.delta, (int, float)) and self.delta > 0.0):
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not (isinstance(self.p, int) and self.p >= 1):
            raise ValueError(f"shift p must be an integer >= 1, got {self.p!r}")
        if not (0.0 < self.lam < 1.0):
            raise ValueError(f"lam must lie strictly in (0, 1), got {self.lam!r}")
        if not (isinstance(self.n0, int) and self.n0 >= 1):
            raise ValueError(f"cutoff n0 must be an integer >= 1, got {self.n0!r}")

    def to_dict(self) -> dict:
        return {"delta": self.delta, "p": self.p, "lambda": self.lam, "n0": self.n0}


class SequencePrefix:
    """A finite prefix x_1 .. x_N together with its metric.

    Construction validates every point against the metric (dimension and
    finiteness).  Distance evaluation is O(N^2) and recomputed per call: at
    the prefix lengths this package targets, statelessness is cheaper than a
    cache contract.
    """

    def __init__(self, points: Sequence[Point], metric: DbMetric):
        pts = list(points)
        if len(pts) < 2:
            raise PrefixTooShort(f"a prefix needs at least 2 points, got {len(pts)}")
        dims = {p.dim for p in pts}
        if len(dims) != 1:
            raise ValueError(f"points have inconsistent dimensions: {sorted(dims)}")
        for p in pts:
            metric._check_point(p)
        self.points = pts
        self.metric = metric

    @classmethod
    def from_values(cls, values: Sequence, metric: DbMetric) -> "SequencePrefix":
        return cls([Point(v) for v in values], metric)

    def __len__(self) -> int:
        return len(self.points)

    def point(self, n: int) -> Point:
        """1-based access to x_n."""
        if not (1 <= n <= len(self.points)):
            raise IndexError(f"index {n} outside 1..{len(self.points)}")
        return self.points[n - 1]

    def coords_array(self) -> np.ndarray:
        return np.stack([p.coords for p in self.points])

    def distance(self, n: int, m: int) -> float:
        return self.metric.distance(self.point(n), self.point(m))

    def distance_matrix(self) -> np.ndarray:
        """Validated all-pairs matrix; entry [i, j] is rho(x_{i+1}, x_{j+1})."""
        return self.metric.matrix(self.coords_array())


def consecutive_distances(seq: SequencePrefix) -> list[float]:
    """[rho(x_2, x_1), rho(x_3, x_2), ...]; length N - 1."""
    coords = seq.coords_array()
    return seq.metric.rows(coords[1:], coords[:-1]).tolist()


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsecutiveDecayReport:
    holds: bool
    tail_max: float
    first_good_index: Optional[int]
    window_start: int
    eps: float

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "tail_max": self.tail_max,
            "first_good_index": self.first_good_index,
            "window_start": self.window_start,
            "eps": self.eps,
        }


def check_consecutive_decay(
    seq: SequencePrefix, tail: TailConfig = TailConfig()
) -> ConsecutiveDecayReport:
    """Check that step distances stay below ``tail.eps`` over the trailing window.

    ``tail_max`` is the maximum of rho(x_{n+1}, x_n) for window indices
    n >= ceil(tau * (N - 1)); the report holds iff that maximum is at most
    ``eps``.  ``first_good_index`` is the smallest n from which the *entire*
    remaining suffix stays below ``eps`` (None if even the last step is above).
    """
    steps = consecutive_distances(seq)
    count = len(steps)
    window_start = max(1, math.ceil(tail.tau * count))
    if window_start > count:
        raise PrefixTooShort(f"window start {window_start} beyond last step index {count}")
    tail_max = max(steps[window_start - 1 :])

    first_good: Optional[int] = None
    for n in range(count, 0, -1):
        if steps[n - 1] <= tail.eps:
            first_good = n
        else:
            break

    return ConsecutiveDecayReport(
        holds=tail_max <= tail.eps,
        tail_max=tail_max,
        first_good_index=first_good,
        window_start=window_start,
        eps=tail.eps,
    )


@dataclass(frozen=True)
class ShiftContractionReport:
    holds: bool
    pairs_checked: int
    pairs_triggered: int
    violating_pair: Optional[tuple[int, int]]

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "pairs_checked": self.pairs_checked,
            "pairs_triggered": self.pairs_triggered,
            "violating_pair": (
                None if self.violating_pair is None else list(self.violating_pair)
            ),
        }


def check_shift_contraction(
    seq: SequencePrefix, w: ShiftWitness, matrix: Optional[np.ndarray] = None
) -> ShiftContractionReport:
    """Scan every pair n0 < n <= m <= N - p for the shift-contraction property.

    A pair is *triggered* when eta < rho(x_n, x_m) < delta - eta; a triggered
    pair must satisfy rho(x_{n+p}, x_{m+p}) < delta * lam / s - eta.  The scan
    includes the diagonal n = m, so positive self-distances participate.  The
    report carries the lexicographically smallest violating pair, if any; a
    vacuously true condition is visible through ``pairs_triggered == 0``.
    """
    n = len(seq)
    if n < w.n0 + w.p + 2:
        raise PrefixTooShort(
            f"need N >= n0 + p + 2 = {w.n0 + w.p + 2} for at least one checkable pair, got N = {n}"
        )
    dm = seq.distance_matrix() if matrix is None else matrix
    s = seq.metric.s

    # 0-based row/col indices for 1-based n in (n0, N - p].
    rows = np.arange(w.n0, n - w.p)
    sub = dm[np.ix_(rows, rows)]
    shifted = dm[np.ix_(rows + w.p, rows + w.p)]
    upper = np.triu(np.ones(sub.shape, dtype=bool))

    triggered = upper & (sub > ETA) & (sub < w.delta - ETA)
    bad = triggered & ~(shifted < w.delta * w.lam / s - ETA)

    t = rows.size
    pairs_checked = t * (t + 1) // 2
    pairs_triggered = int(np.count_nonzero(triggered))

    violating: Optional[tuple[int, int]] = None
    if np.any(bad):
        i, j = np.argwhere(bad)[0]  # row-major order = lexicographic in (n, m)
        violating = (int(rows[i]) + 1, int(rows[j]) + 1)

    return ShiftContractionReport(
        holds=violating is None,
        pairs_checked=pairs_checked,
        pairs_triggered=pairs_triggered,
        violating_pair=violating,
    )


def tail_diameter(seq: SequencePrefix, n0: int, matrix: Optional[np.ndarray] = None) -> float:
    """Brute-force oracle: max rho(x_n, x_m) over n0 <= n <= m <= N.

    Self-distances are included, so a dislocated tail cannot hide.  This is
    the ground truth every certificate is compared against; it is monotone
    nonincreasing in n0.
    """
    n = len(seq)
    if not (1 <= n0 < n):
        raise PrefixTooShort(f"cutoff n0 = {n0} leaves no tail pairs in a prefix of length {n}")
    dm = seq.distance_matrix() if matrix is None else matrix
    tail = dm[n0 - 1 :, n0 - 1 :]
    return float(np.max(np.triu(tail)))


# ---------------------------------------------------------------------------
# Witness search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    """Grids for the witness search.

    ``n0_values`` of None derives the cutoff grid {1, ceil(N/8), ceil(N/4)}
    from the prefix length.
    """

    p_max: int = 8
    lambdas: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    n0_values: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.p_max < 1:
            raise ValueError("p_max must be >= 1")
        for lam in self.lambdas:
            if not (0.0 < lam < 1.0):
                raise ValueError(f"lambda grid entries must lie in (0, 1), got {lam}")


@dataclass(frozen=True)
class WitnessSearch:
    witness: Optional[ShiftWitness]
    report: Optional[ShiftContractionReport]
    p_max_used: int
    truncated: bool

    def to_dict(self) -> dict:
        return {
            "witness": None if self.witness is None else self.witness.to_dict(),
            "report": None if self.report is None else self.report.to_dict(),
            "p_max_used": self.p_max_used,
            "truncated": self.truncated,
        }


def default_n0_grid(n: int) -> tuple[int, ...]:
    return tuple(sorted({1, math.ceil(n / 8), math.ceil(n / 4)}))


def search_witness(
    seq: SequencePrefix, delta: float, cfg: SearchConfig = SearchConfig()
) -> WitnessSearch:
    """Scan (p asc, then lam asc, then n0 asc) for the first holding witness.

    The scan order is part of the contract: the returned witness is the
    lexicographically smallest over (p, lam, n0) among holding ones.  Grid
    combinations the prefix is too short for are skipped and flagged via
    ``truncated``; callers should check ``report.pairs_triggered`` to tell a
    vacuous witness from a substantive one.
    """
    n = len(seq)
    n0s = cfg.n0_values if cfg.n0_values is not None else default_n0_grid(n)
    dm = seq.distance_matrix()

    p_cap = n - min(n0s) - 2
    p_max_used = min(cfg.p_max, max(p_cap, 0))
    truncated = p_max_used < cfg.p_max
    if p_max_used < 1:
        raise PrefixTooShort(f"prefix of length {n} is too short for any shift with n0 grid {n0s}")

    for p in range(1, p_max_used + 1):
        for lam in cfg.lambdas:
            for n0 in n0s:
                if n < n0 + p + 2:
                    truncated = True
                    continue
                w = ShiftWitness(delta=delta, p=p, lam=lam, n0=n0)
                report = check_shift_contraction(seq, w, matrix=dm)
                if report.holds:
                    return WitnessSearch(w, report, p_max_used, truncated)
    return WitnessSearch(None, None, p_max_used, truncated)


# ---------------------------------------------------------------------------
# Named generators (CLI sequence sources)
# ---------------------------------------------------------------------------

def arithmetic_sequence(n: int, start: float = 1.0, step: float = 1.0) -> list[float]:
    """x_k = start + (k - 1) * step; the defaults give x_k = k."""
    if n < 2:
        raise ValueError("need at least 2 terms")
    return [start + (k - 1) * step for k in range(1, n + 1)]


def geometric_sequence(n: int, start: float = 1.0, ratio: float = 0.5) -> list[float]:
    """x_k = start * ratio**(k - 1)."""
    if n < 2:
        raise ValueError("need at least 2 terms")
    return [start * ratio ** (k - 1) for k in range(1, n + 1)]


def constant_sequence(n: int, value: float = 1.0) -> list[float]:
    if n < 2:
        raise ValueError("need at least 2 terms")
    return [float(value)] * n


GENERATORS: dict[str, tuple[Callable[..., list[float]], dict[str, str]]] = {
    "arithmetic": (
        arithmetic_sequence,
        {"n": "number of terms", "start": "first term (default 1.0)", "step": "increment (default 1.0)"},
    ),
    "geometric": (
        geometric_sequence,
        {"n": "number of terms", "start": "first term (default 1.0)", "ratio": "common ratio (default 0.5)"},
    ),
    "constant": (
        constant_sequence,
        {"n": "number of terms", "value": "repeated value (default 1.0)"},
    ),
}


def make_sequence(name: str, metric: DbMetric, **params) -> SequencePrefix:
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; available: {sorted(GENERATORS)}")
    factory, _ = GENERATORS[name]
    return SequencePrefix.from_values(factory(**params), metric)


def available_generators() -> dict[str, dict[str, str]]:
    return {name: dict(params) for name, (_, params) in GENERATORS.items()}
