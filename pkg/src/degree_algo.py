"""
Exact cross-ratio degree d_T via Goldner's splitting recursion,
memoized on a labeled normal form (never loses a subproblem it has seen)
"""

import logging
import time
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from src.hypergraph_module import (
    Edge,
    Hypergraph,
    edge_masks,
    is_balanced,
    isolated_vertices,
    normal_form,
)

logger = logging.getLogger(__name__)

# vertex subsets are uint64 bitmasks
MAX_VERTICES = 64

_deadline: ContextVar[float | None] = ContextVar("xratio_degree_deadline", default=None)


class InvalidPivotError(ValueError):
    """Raised when a pivot edge or pair does not belong to the hypergraph"""
    pass


class DegreeSizeError(ValueError):
    """Raised when a hypergraph has more vertices than a bitmask can hold"""
    pass


class DegreeTimeoutError(TimeoutError):
    """Raised when the recursion runs past its deadline"""
    pass


@dataclass(frozen=True)
class GoldnerSplit:
    """One admissible vertex subset V' for a pivot (e, pair) and its two children"""
    pivot_edge: Edge
    pair: tuple[int, int]
    subset: frozenset[int]
    left: Hypergraph
    right: Hypergraph


def _check_size(h: Hypergraph):
    if h.n > MAX_VERTICES:
        raise DegreeSizeError(f"Degree recursion supports at most {MAX_VERTICES} vertices, got {h.n}")


def _pivot_index(h: Hypergraph, e, pair) -> tuple[int, tuple[int, int]]:
    _check_size(h)
    edge = tuple(sorted(e))
    if edge not in h.edges:
        raise InvalidPivotError(f"{list(edge)} is not an edge of {h}")
    pair = tuple(sorted(pair))
    if len(pair) != 2 or pair[0] == pair[1] or not set(pair) <= set(edge):
        raise InvalidPivotError(f"Pair {list(pair)} is not a 2-subset of edge {list(edge)}")
    return h.edges.index(edge), pair


def _admissible_masks(h: Hypergraph, index: int, pair: tuple[int, int]) -> list[int]:
    """
    Vertex masks (bit v-1) of every admissible V' for pivot h.edges[index],
    in ascending order of the free-vertex bitmask.
    """
    pivot = h.edges[index]
    free = [v for v in h.vertices if v not in pivot]
    base = (1 << (pair[0] - 1)) | (1 << (pair[1] - 1))

    # candidate i adds free[j] whenever bit j of i is set
    bits = np.arange(1 << len(free), dtype=np.uint64)
    candidates = np.full(bits.size, base, dtype=np.uint64)
    for j, v in enumerate(free):
        chosen = (bits >> np.uint64(j)) & np.uint64(1)
        candidates |= chosen << np.uint64(v - 1)

    masks = edge_masks(h)
    others = np.array([m for i, m in enumerate(masks) if i != index], dtype=np.uint64)
    if others.size:
        meets = np.bitwise_count(candidates[:, None] & others[None, :])
        candidates = candidates[~(meets == 2).any(axis=1)]
    return [int(c) for c in candidates]


def _side(edges: list[Edge], keep: set[int], fresh: int) -> Hypergraph:
    """Replace every vertex outside keep by fresh, then compress labels to 1..|keep|+1"""
    labels = sorted(keep) + [fresh]
    rename = {v: i + 1 for i, v in enumerate(labels)}
    side_edges = tuple(tuple(rename[v] if v in keep else rename[fresh] for v in e) for e in edges)
    return Hypergraph(n=len(labels), edges=side_edges)


def _build_split(h: Hypergraph, index: int, pair: tuple[int, int], mask: int) -> GoldnerSplit:
    subset = {v for v in h.vertices if mask >> (v - 1) & 1}
    complement = set(h.vertices) - subset
    fresh = h.n + 1
    left_edges, right_edges = [], []
    for i, e in enumerate(h.edges):
        if i == index:
            continue
        if sum(1 for v in e if v in subset) >= 3:
            left_edges.append(e)
        else:
            right_edges.append(e)
    return GoldnerSplit(
        pivot_edge=h.edges[index],
        pair=pair,
        subset=frozenset(subset),
        left=_side(left_edges, subset, fresh),
        right=_side(right_edges, complement, fresh),
    )


def valid_splits(h: Hypergraph, e, pair) -> list[GoldnerSplit]:
    """
    All admissible splits for pivot edge e and pair.

    Args:
        h: Hypergraph
        e: Pivot edge (one occurrence is removed; other copies are filtered)
        pair: Two vertices of e that must lie in V'

    Returns:
        Splits ordered by ascending bitmask of the free vertices in V'

    Raises:
        InvalidPivotError: If e is not an edge of h or pair is not inside e
    """
    index, pair = _pivot_index(h, e, pair)
    return [_build_split(h, index, pair, m) for m in _admissible_masks(h, index, pair)]


# ---------------- Recursion ----------------

def _check_deadline():
    deadline = _deadline.get()
    if deadline is not None and time.monotonic() > deadline:
        raise DegreeTimeoutError("Goldner recursion exceeded its time budget")


def _convention(h: Hypergraph) -> int | None:
    """Degree fixed by convention, or None when the recursion must run"""
    if not is_balanced(h):
        return 0
    if h.num_edges == 0:
        return 1
    if isolated_vertices(h):
        return 0
    if h.num_edges == 1:
        return 1
    return None


def _choose_pivot(h: Hypergraph) -> tuple[int, tuple[int, int], list[int]]:
    """Pivot minimizing the number of admissible subsets; ties go to the lexicographically first"""
    best = None
    seen = set()
    for index, edge in enumerate(h.edges):
        if edge in seen:
            continue
        seen.add(edge)
        for pair in combinations(edge, 2):
            masks = _admissible_masks(h, index, pair)
            key = (len(masks), edge, pair)
            if best is None or key < best[0]:
                best = (key, index, pair, masks)
            if not masks:
                return index, pair, masks
    _, index, pair, masks = best
    return index, pair, masks


def _degree(h: Hypergraph) -> int:
    fixed = _convention(h)
    if fixed is not None:
        return fixed
    return _solve(*normal_form(h))


@lru_cache(maxsize=None)
def _solve(n: int, edges: tuple[Edge, ...]) -> int:
    _check_deadline()
    h = Hypergraph(n=n, edges=edges)
    index, pair, masks = _choose_pivot(h)
    total = 0
    for mask in masks:
        split = _build_split(h, index, pair, mask)
        left = _degree(split.left)
        if left:
            total += left * _degree(split.right)
    return total


@contextmanager
def degree_deadline(timeout: float | None):
    """Bound every degree computation in this context to timeout seconds"""
    if timeout is None:
        yield
        return
    token = _deadline.set(time.monotonic() + timeout)
    try:
        yield
    finally:
        _deadline.reset(token)


def cross_ratio_degree(h: Hypergraph, timeout: float | None = None) -> int:
    """
    d_T by Goldner's recursion.

    Unbalanced hypergraphs and balanced ones with an isolated vertex have
    degree 0; the edgeless hypergraph on 3 vertices and a single edge have
    degree 1.

    Raises:
        DegreeTimeoutError: If timeout (seconds) elapses first
        DegreeSizeError: If h has more than MAX_VERTICES vertices
    """
    _check_size(h)
    with degree_deadline(timeout):
        value = _degree(h)
    logger.debug("d_T = %d for %s (memo %s)", value, h, _solve.cache_info())
    return value


def degree_with_choice(h: Hypergraph, e, pair) -> int:
    """Degree computed with the top-level pivot forced to (e, pair)"""
    index, pair = _pivot_index(h, e, pair)
    if not is_balanced(h) or (h.num_edges and isolated_vertices(h)):
        return 0
    return sum(_degree(s.left) * _degree(s.right) for s in
               (_build_split(h, index, pair, m) for m in _admissible_masks(h, index, pair)))


def choice_sweep(h: Hypergraph) -> dict[tuple[Edge, tuple[int, int]], int]:
    """degree_with_choice for every distinct pivot edge and every pair inside it"""
    return {
        (edge, pair): degree_with_choice(h, edge, pair)
        for edge in dict.fromkeys(h.edges)
        for pair in combinations(edge, 2)
    }


def clear_degree_cache():
    _solve.cache_clear()


def degree_cache_info():
    return _solve.cache_info()
