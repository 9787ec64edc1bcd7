"""
Perfect matchings of incidence graphs: permanents, matching enumeration,
surplus / Hall criterion and the matching-theoretic upper bounds on d_T.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import factorial

from src.hypergraph_module import (
    Hypergraph,
    VertexTriple,
    all_triples,
    delete_vertices,
    edge_masks,
    incidence_matrix,
    is_balanced,
)

logger = logging.getLogger(__name__)

PERMANENT_MAX_SIDE = 30
ENUMERATION_MAX_SIDE = 12
BREGMAN_MINC_EPS = 1e-9


class MatrixSizeError(ValueError):
    """Raised when a matrix is not square or exceeds a size guard"""
    pass


@dataclass(frozen=True)
class BoundReport:
    """Matching bounds of one balanced hypergraph"""
    n: int
    per_triple: dict[VertexTriple, int]
    min_bound: int
    argmin_triples: list[VertexTriple]
    surplus: int
    bregman_minc_at_argmin: float
    uniform_bound_24: float
    uniform_bound_pow2: int
    bregman_minc: dict[VertexTriple, float] = field(default_factory=dict)

    @property
    def hall_criterion(self) -> bool:
        return self.surplus == 3

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization"""
        return {
            "n": self.n,
            "min_bound": self.min_bound,
            "argmin_triples": [list(t.labels) for t in self.argmin_triples],
            "surplus": self.surplus,
            "hall_criterion": self.hall_criterion,
            "bregman_minc_at_argmin": self.bregman_minc_at_argmin,
            "uniform_bound_24": self.uniform_bound_24,
            "uniform_bound_pow2": self.uniform_bound_pow2,
            "per_triple": {str(t): v for t, v in self.per_triple.items()},
        }


def _as_square(m) -> np.ndarray:
    a = np.asarray(m.entries if hasattr(m, "entries") else m, dtype=np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MatrixSizeError(f"Matrix must be square, got shape {a.shape}")
    return a


def permanent(m) -> int:
    """
    Permanent of a square 0/1 matrix by Ryser's formula.

    Subsets of columns are visited in Gray-code order so each step updates
    the k running row sums by one column. The accumulator is a Python int.

    Args:
        m: Square matrix (array-like or BiadjacencyMatrix), side k <= 30

    Returns:
        The permanent

    Raises:
        MatrixSizeError: If m is not square or k > 30
    """
    a = _as_square(m)
    k = a.shape[0]
    if k > PERMANENT_MAX_SIDE:
        raise MatrixSizeError(f"Permanent guard: side {k} exceeds {PERMANENT_MAX_SIDE}")
    if ((a != 0) & (a != 1)).any():
        raise ValueError("Permanent expects a 0/1 matrix")
    if k == 0:
        return 1
    if not a.any(axis=1).all():
        return 0

    column_entries = [[(int(r), int(a[r, j])) for r in np.flatnonzero(a[:, j])] for j in range(k)]
    rowsums = [0] * k
    in_subset = [False] * k
    total = 0
    for step in range(1, 1 << k):
        # Gray code flips the bit at the lowest set position of step
        j = (step & -step).bit_length() - 1
        sign = -1 if in_subset[j] else 1
        for r, value in column_entries[j]:
            rowsums[r] += sign * value
        in_subset[j] = not in_subset[j]
        size = (step ^ (step >> 1)).bit_count()
        product = math.prod(rowsums)
        total += product if (k - size) % 2 == 0 else -product
    return total


def enumerate_perfect_matchings(m) -> list[tuple[int, ...]]:
    """
    Every perfect matching as a 1-based column sequence, one entry per row,
    in lexicographic order.

    Raises:
        MatrixSizeError: If m is not square or k > 12
    """
    a = _as_square(m)
    k = a.shape[0]
    if k > ENUMERATION_MAX_SIDE:
        raise MatrixSizeError(f"Enumeration guard: side {k} exceeds {ENUMERATION_MAX_SIDE}")

    options = [np.flatnonzero(a[r]).tolist() for r in range(k)]
    matchings = []
    chosen: list[int] = []
    used = [False] * k

    def extend(row: int):
        if row == k:
            matchings.append(tuple(c + 1 for c in chosen))
            return
        for c in options[row]:
            if not used[c]:
                used[c] = True
                chosen.append(c)
                extend(row + 1)
                chosen.pop()
                used[c] = False

    extend(0)
    return matchings


def reduced_matrix(h: Hypergraph, t: VertexTriple):
    t.check_range(h.n)
    return delete_vertices(incidence_matrix(h), t)


def matching_edges(h: Hypergraph, t: VertexTriple, matching: tuple[int, ...]) -> list[tuple[int, int]]:
    """Translate a column sequence of the reduced matrix into (edge index, vertex label) pairs"""
    cols = reduced_matrix(h, t).cols
    return [(row, cols[c - 1]) for row, c in enumerate(matching)]


def _require_balanced(h: Hypergraph):
    if not is_balanced(h):
        raise MatrixSizeError(
            f"Hypergraph is unbalanced: {h.num_edges} edges on {h.n} vertices (need n - 3)")


def matching_bound(h: Hypergraph, t: VertexTriple) -> int:
    """P(G_T - {v1, v2, v3})"""
    _require_balanced(h)
    return permanent(reduced_matrix(h, t))


def bregman_minc(h: Hypergraph, t: VertexTriple) -> float:
    """Product over edges of (d_e!)^(1/d_e), d_e = |e minus t| (always >= 1)"""
    _require_balanced(h)
    t.check_range(h.n)
    value = 1.0
    for e in h.edges:
        d = sum(1 for v in e if v not in t)
        value *= float(factorial(d, exact=True)) ** (1.0 / d)
    return value


def bregman_minc_floor(value: float) -> int:
    return math.floor(value + BREGMAN_MINC_EPS)


def uniform_bounds(n: int) -> tuple[float, int]:
    """(24^((n-3)/4), 2^(n-4))"""
    if n < 4:
        raise ValueError(f"Uniform bounds need n >= 4, got {n}")
    return 24.0 ** ((n - 3) / 4), 2 ** (n - 4)


def _deficiencies(h: Hypergraph) -> tuple[np.ndarray, np.ndarray]:
    # unions[s] is the vertex mask of N(edges in s); s = 0 is the empty subset
    if h.n > 64:
        raise MatrixSizeError(f"Surplus enumeration supports at most 64 vertices, got {h.n}")
    unions = np.zeros(1, dtype=np.uint64)
    for mask in edge_masks(h):
        unions = np.concatenate([unions, unions | np.uint64(mask)])
    sizes = np.bitwise_count(np.arange(unions.size, dtype=np.uint64)).astype(np.int64)
    return unions, np.bitwise_count(unions).astype(np.int64) - sizes


def surplus(h: Hypergraph) -> int:
    """
    sigma(G_T) = min over nonempty edge subsets E' of |N(E')| - |E'|,
    by exhaustive enumeration of the 2^|E| - 1 subsets.
    """
    if h.num_edges == 0:
        raise ValueError("Surplus is undefined for an empty edge set")
    _, deficiency = _deficiencies(h)
    return int(deficiency[1:].min())


def hall_violator(h: Hypergraph) -> tuple[tuple[int, ...], VertexTriple] | None:
    """
    An edge subset E' with |N(E')| - |E'| < 3 together with a triple inside
    N(E') whose deletion kills every perfect matching, or None when sigma = 3.
    """
    if h.num_edges == 0:
        return None
    unions, deficiency = _deficiencies(h)
    deficiency[0] = 3
    s = int(np.argmin(deficiency))
    if deficiency[s] >= 3:
        return None
    subset = tuple(i for i in range(h.num_edges) if s >> i & 1)
    neighbors = [v for v in h.vertices if int(unions[s]) >> (v - 1) & 1]
    return subset, VertexTriple(tuple(neighbors[:3]))


def hall_criterion(h: Hypergraph) -> bool:
    _require_balanced(h)
    return surplus(h) == 3


def min_matching_bound(h: Hypergraph) -> BoundReport:
    """Evaluate the matching bound for all C(n,3) triples and fill a BoundReport"""
    _require_balanced(h)
    per_triple = {t: matching_bound(h, t) for t in all_triples(h.n)}
    bm = {t: bregman_minc(h, t) for t in per_triple}
    best = min(per_triple.values())
    argmin = [t for t, v in per_triple.items() if v == best]
    sigma = surplus(h)
    if (best > 0) != (sigma == 3):
        raise AssertionError(
            f"Surplus criterion mismatch on {h}: min bound {best}, surplus {sigma}")
    u24, pow2 = uniform_bounds(h.n)
    logger.debug("Bounds for %s: min=%d over %d triples", h, best, len(argmin))
    return BoundReport(
        n=h.n,
        per_triple=per_triple,
        min_bound=best,
        argmin_triples=argmin,
        surplus=sigma,
        bregman_minc_at_argmin=bm[argmin[0]],
        uniform_bound_24=u24,
        uniform_bound_pow2=pow2,
        bregman_minc=bm,
    )


def bound_gap(degree: int, bound: int) -> str:
    return "TIGHT" if degree == bound else f"GAP {bound - degree}"
