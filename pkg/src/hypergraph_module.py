"""
4-uniform hypergraphs: data model, incidence matrices, file formats,
transformations and seeded random generation.
"""

import json
import logging
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, combinations_with_replacement
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.special import comb

logger = logging.getLogger(__name__)

EDGE_SIZE = 4
FORMATS = ("json", "plain")
MASK64 = (1 << 64) - 1

Edge = tuple[int, int, int, int]


class InvalidHypergraphError(ValueError):
    """Raised when a hypergraph, triple or permutation is malformed"""
    pass


@dataclass(frozen=True)
class Hypergraph:
    """
    A 4-uniform hypergraph on vertices 1..n.

    Edges form a multiset: duplicates are kept, in insertion order, each
    stored as a sorted 4-tuple.
    """
    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < EDGE_SIZE - 1:
            raise InvalidHypergraphError(f"Vertex count must be an integer >= 3, got {self.n!r}")
        normalized = []
        for edge in self.edges:
            vertices = tuple(sorted(edge))
            if len(vertices) != EDGE_SIZE or len(set(vertices)) != EDGE_SIZE:
                raise InvalidHypergraphError(f"Edge {list(edge)} must have exactly 4 distinct vertices")
            for v in vertices:
                if not isinstance(v, int) or not 1 <= v <= self.n:
                    raise InvalidHypergraphError(f"Vertex {v!r} of edge {list(edge)} is outside [1, {self.n}]")
            normalized.append(vertices)
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def __str__(self):
        body = ", ".join("{" + ",".join(map(str, e)) + "}" for e in self.edges)
        return f"Hypergraph(n={self.n}, edges=[{body}])"


@dataclass(frozen=True, order=True)
class VertexTriple:
    """Three distinct vertex labels, stored sorted"""
    labels: tuple[int, int, int]

    def __post_init__(self):
        labels = tuple(sorted(self.labels))
        if len(labels) != 3 or len(set(labels)) != 3:
            raise InvalidHypergraphError(f"A triple needs three distinct labels, got {list(self.labels)}")
        if any(not isinstance(v, int) or v < 1 for v in labels):
            raise InvalidHypergraphError(f"Triple labels must be positive integers, got {list(self.labels)}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, *labels: int) -> "VertexTriple":
        return cls(tuple(labels))

    @classmethod
    def parse(cls, text: str) -> "VertexTriple":
        """Parse 'a,b,c'"""
        try:
            return cls(tuple(int(part) for part in text.split(",")))
        except ValueError as e:
            raise InvalidHypergraphError(f"Could not parse triple {text!r}: {e}") from e

    def check_range(self, n: int):
        if self.labels[-1] > n:
            raise InvalidHypergraphError(f"Triple {self} has a label outside [1, {n}]")

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, v):
        return v in self.labels

    def __str__(self):
        return ",".join(map(str, self.labels))


@dataclass(frozen=True, eq=False)
class BiadjacencyMatrix:
    """0/1 incidence matrix: rows are edge indices, columns are vertex labels"""
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    entries: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    @property
    def is_square(self) -> bool:
        return len(self.rows) == len(self.cols)

    def __eq__(self, other):
        if not isinstance(other, BiadjacencyMatrix):
            return NotImplemented
        return (self.rows == other.rows and self.cols == other.cols
                and np.array_equal(self.entries, other.entries))

    def tolist(self) -> list[list[int]]:
        return self.entries.tolist()


# ---------------- Structural helpers ----------------

def is_balanced(h: Hypergraph) -> bool:
    """|E| = n - 3"""
    return h.num_edges == h.n - 3


def vertex_star(h: Hypergraph, v: int) -> tuple[int, ...]:
    """Indices of the edges containing v (the star E_v)"""
    return tuple(i for i, e in enumerate(h.edges) if v in e)


def isolated_vertices(h: Hypergraph) -> list[int]:
    covered = {v for e in h.edges for v in e}
    return [v for v in h.vertices if v not in covered]


def edge_multiplicities(h: Hypergraph) -> Counter:
    return Counter(h.edges)


def edge_masks(h: Hypergraph) -> tuple[int, ...]:
    """Edges as 0-based vertex bitmasks (bit v-1 for label v)"""
    return tuple(sum(1 << (v - 1) for v in e) for e in h.edges)


def all_triples(n: int) -> Iterator[VertexTriple]:
    for labels in combinations(range(1, n + 1), 3):
        yield VertexTriple(labels)


def normal_form(h: Hypergraph) -> tuple[int, tuple[Edge, ...]]:
    """
    Cheap labeled normal form used as a memo key.

    Edges are sorted, vertices relabeled by first appearance, then edges are
    re-sorted. Isomorphic hypergraphs may still get different keys.
    """
    edges = sorted(h.edges)
    relabel_map: dict[int, int] = {}
    for e in edges:
        for v in e:
            if v not in relabel_map:
                relabel_map[v] = len(relabel_map) + 1
    for v in h.vertices:
        if v not in relabel_map:
            relabel_map[v] = len(relabel_map) + 1
    renamed = sorted(tuple(sorted(relabel_map[v] for v in e)) for e in edges)
    return h.n, tuple(renamed)


# ---------------- Parsing and serialization ----------------

def _parse_json(text: str) -> tuple[int, list]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidHypergraphError(f"Malformed JSON: {e}") from e
    if not isinstance(data, dict) or "n" not in data or "edges" not in data:
        raise InvalidHypergraphError("JSON hypergraph must be an object with fields 'n' and 'edges'")
    n, edges = data["n"], data["edges"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise InvalidHypergraphError(f"Field 'n' must be an integer, got {n!r}")
    if not isinstance(edges, list) or not all(isinstance(e, list) for e in edges):
        raise InvalidHypergraphError("Field 'edges' must be an array of arrays")
    for e in edges:
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in e):
            raise InvalidHypergraphError(f"Edge {e} must contain integers only")
    return n, edges


def _parse_plain(text: str) -> tuple[int, list]:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise InvalidHypergraphError(f"Line {lineno}: expected 'n <int>' header, got {line!r}")
            try:
                n = int(parts[1])
            except ValueError as e:
                raise InvalidHypergraphError(f"Line {lineno}: bad vertex count {parts[1]!r}") from e
            continue
        try:
            edges.append([int(p) for p in parts])
        except ValueError as e:
            raise InvalidHypergraphError(f"Line {lineno}: non-integer vertex in {line!r}") from e
    if n is None:
        raise InvalidHypergraphError("Missing 'n <int>' header")
    return n, edges


def parse_hypergraph(text: bytes | str, format: str = "json") -> Hypergraph:
    """
    Parse a hypergraph from JSON or plain text.

    Args:
        text: Serialized hypergraph
        format: 'json' or 'plain'

    Returns:
        Hypergraph with edges in input order

    Raises:
        InvalidHypergraphError: On malformed syntax, bad edges or n < 4
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise InvalidHypergraphError(f"Input is not UTF-8: {e}") from e

    if format == "json":
        n, edges = _parse_json(text)
    elif format == "plain":
        n, edges = _parse_plain(text)
    else:
        raise InvalidHypergraphError(f"Unknown format {format!r}; expected one of {FORMATS}")

    if n < EDGE_SIZE:
        raise InvalidHypergraphError(f"Vertex count must be at least 4, got {n}")
    for e in edges:
        if len(e) != EDGE_SIZE:
            raise InvalidHypergraphError(f"Edge {e} has {len(e)} vertices; exactly 4 are required")
    return Hypergraph(n=n, edges=tuple(tuple(e) for e in edges))


def serialize_hypergraph(h: Hypergraph, format: str = "json") -> bytes:
    """Canonical serialization: edges sorted within and then among themselves"""
    edges = sorted(h.edges)
    if format == "json":
        payload = {"n": h.n, "edges": [list(e) for e in edges]}
        return json.dumps(payload, separators=(",", ":")).encode("utf-8")
    if format == "plain":
        lines = [f"n {h.n}"] + [" ".join(map(str, e)) for e in edges]
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise InvalidHypergraphError(f"Unknown format {format!r}; expected one of {FORMATS}")


def edges_to_plain_list(h: Hypergraph) -> str:
    """Plain-format edge list with ';' separators, as used in CSV rows"""
    return ";".join(" ".join(map(str, e)) for e in sorted(h.edges))


def edges_from_plain_list(n: int, text: str) -> Hypergraph:
    edges = [tuple(int(v) for v in chunk.split()) for chunk in text.split(";") if chunk.strip()]
    return Hypergraph(n=n, edges=tuple(edges))


def format_for_path(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "plain"


def read_hypergraph(path: Path | str, format: str | None = None) -> Hypergraph:
    path = Path(path)
    return parse_hypergraph(path.read_bytes(), format or format_for_path(path))


def write_hypergraph(h: Hypergraph, path: Path | str, format: str | None = None):
    path = Path(path)
    path.write_bytes(serialize_hypergraph(h, format or format_for_path(path)))


# ---------------- Matrices and transformations ----------------

def incidence_matrix(h: Hypergraph) -> BiadjacencyMatrix:
    """|E| x n 0/1 matrix, rows in edge order, columns in label order"""
    entries = np.zeros((h.num_edges, h.n), dtype=np.int64)
    for i, e in enumerate(h.edges):
        entries[i, [v - 1 for v in e]] = 1
    return BiadjacencyMatrix(
        rows=tuple(range(h.num_edges)),
        cols=tuple(h.vertices),
        entries=entries,
    )


def delete_vertices(b: BiadjacencyMatrix, t: VertexTriple) -> BiadjacencyMatrix:
    """Remove the columns of the three labels in t"""
    missing = [v for v in t if v not in b.cols]
    if missing:
        raise InvalidHypergraphError(f"Labels {missing} are not columns of the matrix")
    drop = [b.cols.index(v) for v in t]
    keep_cols = tuple(c for c in b.cols if c not in t)
    return BiadjacencyMatrix(
        rows=b.rows,
        cols=keep_cols,
        entries=np.delete(b.entries, drop, axis=1),
    )


def add_edge_transform(h: Hypergraph, t: VertexTriple) -> Hypergraph:
    """T' with a new vertex n+1 and the extra edge t + {n+1}"""
    t.check_range(h.n)
    new_vertex = h.n + 1
    return Hypergraph(n=new_vertex, edges=h.edges + ((*t.labels, new_vertex),))


def relabel(h: Hypergraph, perm: Mapping[int, int] | Sequence[int]) -> Hypergraph:
    """
    Apply a vertex permutation.

    Args:
        h: Hypergraph
        perm: Mapping old -> new, or a sequence whose (i-1)-th entry is the
            image of i

    Raises:
        InvalidHypergraphError: If perm is not a bijection on [1, n]
    """
    if isinstance(perm, Mapping):
        mapping = dict(perm)
    else:
        mapping = {i + 1: image for i, image in enumerate(perm)}
    domain = set(range(1, h.n + 1))
    if set(mapping) != domain or set(mapping.values()) != domain:
        raise InvalidHypergraphError(f"Not a permutation of [1, {h.n}]: {perm!r}")
    return Hypergraph(n=h.n, edges=tuple(tuple(mapping[v] for v in e) for e in h.edges))


def inverse_permutation(perm: Mapping[int, int] | Sequence[int]) -> dict[int, int]:
    if isinstance(perm, Mapping):
        return {image: v for v, image in perm.items()}
    return {image: i + 1 for i, image in enumerate(perm)}


# ---------------- Random generation and sweeps ----------------

@lru_cache(maxsize=None)
def four_subsets(n: int) -> tuple[Edge, ...]:
    """All C(n,4) 4-subsets of [1, n], lexicographic"""
    return tuple(combinations(range(1, n + 1), EDGE_SIZE))


def random_hypergraph(n: int, rng_seed: int) -> Hypergraph:
    """
    Balanced hypergraph with n-3 edges drawn i.i.d. uniformly from the
    C(n,4) 4-subsets, repetition allowed. Pure function of (n, seed).
    """
    if n < 5:
        raise InvalidHypergraphError(f"Random hypergraphs need n >= 5, got {n}")
    subsets = four_subsets(n)
    rng = np.random.default_rng(rng_seed & MASK64)
    picks = rng.integers(0, len(subsets), size=n - 3)
    return Hypergraph(n=n, edges=tuple(subsets[i] for i in picks))


def all_hypergraphs(n: int) -> Iterator[Hypergraph]:
    """Every balanced edge multiset on [1, n] (no isomorphism reduction)"""
    total = comb(comb(n, EDGE_SIZE, exact=True) + n - 4, n - 3, exact=True)
    logger.debug("Sweeping %d edge multisets for n=%d", total, n)
    for edges in combinations_with_replacement(four_subsets(n), n - 3):
        yield Hypergraph(n=n, edges=edges)
