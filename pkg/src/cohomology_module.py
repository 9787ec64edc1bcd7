"""
Truncated ring Z[H_e]/<H_e^4> and the incidence-class product whose
coefficient of prod_e H_e^3 re-derives the matching bound.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Mapping

import sympy

from src.hypergraph_module import Hypergraph, VertexTriple, is_balanced, vertex_star

logger = logging.getLogger(__name__)

MAX_EXPONENT = 3
# Each variable owns a 3-bit field: two exponent bits plus a guard bit that
# lights up exactly when a product exponent reaches 4.
FIELD_BITS = 3
FIELD_MASK = (1 << FIELD_BITS) - 1
COEFFICIENT_MAX = (1 << 64) - 1


class VariableMismatchError(ValueError):
    """Raised when two polynomials live over different variable sets"""
    pass


class DegenerateClassError(ValueError):
    """Raised when an incidence class is undefined (isolated vertex outside the triple)"""
    pass


class CoefficientOverflowError(OverflowError):
    """Raised when a coefficient leaves the unsigned 64-bit range"""
    pass


def _guard_mask(num_vars: int) -> int:
    return sum(1 << (FIELD_BITS * i + 2) for i in range(num_vars))


def pack(exponents: Iterable[int]) -> int:
    packed = 0
    for i, x in enumerate(exponents):
        packed |= x << (FIELD_BITS * i)
    return packed


def unpack(packed: int, num_vars: int) -> tuple[int, ...]:
    return tuple((packed >> (FIELD_BITS * i)) & FIELD_MASK for i in range(num_vars))


class TruncatedPolynomial:
    """
    Polynomial in num_vars variables with every exponent <= 3 and
    nonnegative integer coefficients. Immutable.
    """
    __slots__ = ("num_vars", "terms", "_guard")

    def __init__(self, num_vars: int, terms: Mapping[tuple[int, ...], int] | None = None):
        """
        Args:
            num_vars: Number of variables (one per hyperedge)
            terms: Exponent vector -> coefficient. Monomials with an exponent
                of 4 or more are zero in the ring and are dropped.
        """
        self.num_vars = num_vars
        self._guard = _guard_mask(num_vars)
        packed_terms: dict[int, int] = {}
        for exponents, coeff in (terms or {}).items():
            exponents = tuple(exponents)
            if len(exponents) != num_vars:
                raise VariableMismatchError(
                    f"Exponent vector {exponents} does not match {num_vars} variables")
            if coeff < 0 or any(x < 0 for x in exponents):
                raise ValueError(f"Negative exponent or coefficient in {exponents}: {coeff}")
            if coeff == 0 or any(x > MAX_EXPONENT for x in exponents):
                continue
            key = pack(exponents)
            packed_terms[key] = packed_terms.get(key, 0) + coeff
        self.terms = _checked(packed_terms)

    @classmethod
    def _from_packed(cls, num_vars: int, packed_terms: dict[int, int]) -> "TruncatedPolynomial":
        poly = cls.__new__(cls)
        poly.num_vars = num_vars
        poly._guard = _guard_mask(num_vars)
        poly.terms = _checked({k: c for k, c in packed_terms.items() if c})
        return poly

    @classmethod
    def zero(cls, num_vars: int) -> "TruncatedPolynomial":
        return cls._from_packed(num_vars, {})

    @classmethod
    def one(cls, num_vars: int) -> "TruncatedPolynomial":
        return cls._from_packed(num_vars, {0: 1})

    @classmethod
    def variable(cls, num_vars: int, index: int, power: int = 1) -> "TruncatedPolynomial":
        exponents = [0] * num_vars
        exponents[index] = power
        return cls(num_vars, {tuple(exponents): 1})

    @classmethod
    def squarefree(cls, num_vars: int, indices: Iterable[int]) -> "TruncatedPolynomial":
        """The monomial prod_{i in indices} H_i"""
        exponents = [0] * num_vars
        for i in indices:
            exponents[i] += 1
        return cls(num_vars, {tuple(exponents): 1})

    def _check_vars(self, other: "TruncatedPolynomial"):
        if not isinstance(other, TruncatedPolynomial):
            raise TypeError(f"Expected TruncatedPolynomial, got {type(other).__name__}")
        if other.num_vars != self.num_vars:
            raise VariableMismatchError(
                f"Variable sets differ: {self.num_vars} vs {other.num_vars} variables")

    def __add__(self, other: "TruncatedPolynomial") -> "TruncatedPolynomial":
        self._check_vars(other)
        summed = dict(self.terms)
        for key, coeff in other.terms.items():
            summed[key] = summed.get(key, 0) + coeff
        return TruncatedPolynomial._from_packed(self.num_vars, summed)

    def __mul__(self, other: "TruncatedPolynomial") -> "TruncatedPolynomial":
        return multiply(self, other)

    def __eq__(self, other):
        if not isinstance(other, TruncatedPolynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"TruncatedPolynomial({self.num_vars}, {self.as_dict()!r})"

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return {unpack(k, self.num_vars): c for k, c in sorted(self.terms.items())}

    def coefficient(self, exponents: Iterable[int]) -> int:
        return self.terms.get(pack(exponents), 0)

    def top_coefficient(self) -> int:
        """Coefficient of prod_e H_e^3"""
        return self.coefficient([MAX_EXPONENT] * self.num_vars)

    def degrees(self) -> set[int]:
        return {sum(unpack(k, self.num_vars)) for k in self.terms}

    def total_degree(self) -> int:
        return max(self.degrees(), default=0)

    def max_exponent(self) -> int:
        return max((max(unpack(k, self.num_vars), default=0) for k in self.terms), default=0)

    def to_sympy(self, names: list[str] | None = None) -> sympy.Expr:
        names = names or [f"H_e{i + 1}" for i in range(self.num_vars)]
        symbols = [sympy.Symbol(name) for name in names]
        expr = sympy.Integer(0)
        for exponents, coeff in self.as_dict().items():
            expr += coeff * sympy.Mul(*(s ** x for s, x in zip(symbols, exponents)))
        return expr


def _checked(terms: dict[int, int]) -> dict[int, int]:
    for coeff in terms.values():
        if coeff > COEFFICIENT_MAX:
            raise CoefficientOverflowError(f"Coefficient {coeff} exceeds 64-bit range")
    return terms


def multiply(p: TruncatedPolynomial, q: TruncatedPolynomial,
             keep: Callable[[int], bool] | None = None) -> TruncatedPolynomial:
    """
    Distributive product with truncation: monomials with an exponent >= 4
    are discarded.

    Args:
        p, q: Factors over the same variables
        keep: Optional predicate on packed monomials; rejected ones are dropped

    Raises:
        VariableMismatchError: If p and q have different variable counts
    """
    p._check_vars(q)
    guard = p._guard
    product: dict[int, int] = {}
    for a, ca in p.terms.items():
        for b, cb in q.terms.items():
            m = a + b
            if m & guard:
                continue
            product[m] = product.get(m, 0) + ca * cb
    if keep is not None:
        product = {m: c for m, c in product.items() if keep(m)}
    return TruncatedPolynomial._from_packed(p.num_vars, product)


def elementary_symmetric(num_vars: int, indices: Iterable[int], k: int) -> TruncatedPolynomial:
    """e_k in the variables {H_i : i in indices}"""
    terms: dict[tuple[int, ...], int] = {}
    for chosen in combinations(list(indices), k):
        exponents = [0] * num_vars
        for i in chosen:
            exponents[i] += 1
        key = tuple(exponents)
        terms[key] = terms.get(key, 0) + 1
    return TruncatedPolynomial(num_vars, terms)


@dataclass(frozen=True)
class IncidenceClass:
    """Class of the incidence subvariety of one vertex"""
    vertex: int
    poly: TruncatedPolynomial

    @property
    def degree(self) -> int:
        return self.poly.total_degree()


def incidence_class(h: Hypergraph, v: int, t: VertexTriple) -> IncidenceClass:
    """
    Class of the vertex v with respect to the deleted triple t.

    Vertices of t get the monomial prod_{e in E_v} H_e, all others the
    elementary symmetric polynomial e_{|E_v|-1} of their star.

    Raises:
        DegenerateClassError: If v is outside t and in no edge
    """
    if not 1 <= v <= h.n:
        raise DegenerateClassError(f"Vertex {v} is outside [1, {h.n}]")
    star = vertex_star(h, v)
    if v in t:
        return IncidenceClass(vertex=v, poly=TruncatedPolynomial.squarefree(h.num_edges, star))
    if not star:
        raise DegenerateClassError(f"Vertex {v} is isolated; its incidence class is undefined")
    return IncidenceClass(vertex=v, poly=elementary_symmetric(h.num_edges, star, len(star) - 1))


def _ordered_classes(h: Hypergraph, t: VertexTriple) -> list[IncidenceClass]:
    if not is_balanced(h):
        raise DegenerateClassError(
            f"Hypergraph is unbalanced: {h.num_edges} edges on {h.n} vertices")
    t.check_range(h.n)
    classes = [incidence_class(h, v, t) for v in h.vertices]
    classes.sort(key=lambda c: (len(vertex_star(h, c.vertex)), c.vertex))
    total = sum(c.degree for c in classes)
    if total != MAX_EXPONENT * h.num_edges:
        raise AssertionError(f"Class degrees sum to {total}, expected {MAX_EXPONENT * h.num_edges}")
    return classes


def class_product(h: Hypergraph, t: VertexTriple) -> TruncatedPolynomial:
    """Full truncated product of all incidence classes (no pruning)"""
    product = TruncatedPolynomial.one(h.num_edges)
    for c in _ordered_classes(h, t):
        product = product * c.poly
    return product


def cohomology_bound(h: Hypergraph, t: VertexTriple) -> int:
    """
    Coefficient of prod_e H_e^3 in the product of incidence classes.

    After each factor, a monomial survives only if every edge can still
    reach exponent 3 from the factors left to multiply.
    """
    classes = _ordered_classes(h, t)
    m = h.num_edges

    # remaining[i][e]: how many classes after position i still involve H_e
    remaining = [[0] * m for _ in range(len(classes) + 1)]
    for i in range(len(classes) - 1, -1, -1):
        remaining[i] = list(remaining[i + 1])
        for e in vertex_star(h, classes[i].vertex):
            remaining[i][e] += 1

    product = TruncatedPolynomial.one(m)
    for i, c in enumerate(classes):
        reach = remaining[i + 1]

        def alive(packed: int, reach=reach) -> bool:
            return all(x + r >= MAX_EXPONENT for x, r in zip(unpack(packed, m), reach))

        product = multiply(product, c.poly, keep=alive)
        if not product:
            return 0
    logger.debug("Cohomology product for %s minus %s kept %d terms", h, t, len(product))
    return product.top_coefficient()
