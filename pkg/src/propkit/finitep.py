"""Explicit finite groups and brute-force subgroup machinery.

Elements of a :class:`FiniteGroupTable` are indexed ``0..order-1`` with the
identity at index 0; subsets are Python ints used as bitsets over those
indices.  Everything here is deliberately exhaustive: these routines are the
oracles the coordinate and good-basis code is checked against.

Quotients too large to enumerate are handled by :class:`SiftedSubgroup`,
which stores a subgroup of G/P_{n+1} through echelon bases of its congruence
layers and decides membership by sifting.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, Sequence

from .errors import BudgetExceeded, NotAPGroup, NotNilpotent
from .linalg import LinearSolver
from .uniform import UniformGroupModel

DEFAULT_ORDER_BUDGET = 4096
DEFAULT_SUBGROUP_CAP = 100_000


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % q for q in range(2, math.isqrt(n) + 1))


def prime_factors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def _is_power_of(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass
class BaseDecomposition:
    """A subgroup ``H`` of the table mapping onto a product of factors T_j.

    ``kernels[j]`` is the bitset of elements of H whose j-th factor is
    trivial, and ``indicators[j]`` an element of H that is nontrivial exactly
    in factor j.
    """

    base: int
    kernels: list[int]
    indicators: list[int]

    @property
    def size(self) -> int:
        return len(self.kernels)


class FiniteGroupTable:
    """A finite group given by canonical element encodings and a product rule.

    Products are computed on demand and memoised, so tables of a few thousand
    elements stay cheap as long as callers multiply mostly by generators.
    """

    def __init__(self, elements: Sequence[Hashable], op: Callable, inv: Callable, *,
                 provenance: str, name: str, prime: int | None = None,
                 labels: Sequence[str] | None = None, base: BaseDecomposition | None = None):
        self.elements = list(elements)
        self.index = {e: i for i, e in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise ValueError("duplicate element encodings")
        self._op = op
        self._inv_fn = inv
        self.provenance = provenance
        self.name = name
        self.prime = prime
        self.labels = list(labels) if labels is not None else [str(e) for e in self.elements]
        self.base = base
        self._mul: dict[tuple[int, int], int] = {}
        self._inv: dict[int, int] = {}
        self._lattice = None
        self._gens = None
        if self._op(self.elements[0], self.elements[0]) != self.elements[0]:
            raise ValueError("element 0 must be the identity")

    def __repr__(self) -> str:
        return f"FiniteGroupTable({self.name}, order={self.order})"

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def full(self) -> int:
        return (1 << self.order) - 1

    identity = 0

    def mul(self, i: int, j: int) -> int:
        key = (i, j)
        r = self._mul.get(key)
        if r is None:
            r = self.index[self._op(self.elements[i], self.elements[j])]
            self._mul[key] = r
        return r

    def inv(self, i: int) -> int:
        r = self._inv.get(i)
        if r is None:
            r = self.index[self._inv_fn(self.elements[i])]
            self._inv[i] = r
        return r

    def power(self, i: int, n: int) -> int:
        out, base = 0, i
        while n:
            if n & 1:
                out = self.mul(out, base)
            n >>= 1
            if n:
                base = self.mul(base, base)
        return out

    def commutator(self, i: int, j: int) -> int:
        return self.mul(self.mul(self.inv(i), self.inv(j)), self.mul(i, j))

    def conjugate(self, i: int, j: int) -> int:
        return self.mul(self.mul(self.inv(j), i), j)

    def element_order(self, i: int) -> int:
        n, x = 1, i
        while x != 0:
            x = self.mul(x, i)
            n += 1
        return n

    def is_abelian(self) -> bool:
        g = self.generators()
        return all(self.mul(a, b) == self.mul(b, a) for a in g for b in g)

    def exponent(self) -> int:
        return math.lcm(*(self.element_order(i) for i in range(self.order)))

    def verify_axioms(self, sample: int | None = None, rng=None) -> bool:
        """Associativity, identity and inverses; exhaustive for small orders, sampled otherwise."""
        n = self.order
        if sample is None and n ** 3 <= 2_000_000:
            triples: Iterable = itertools.product(range(n), repeat=3)
        else:
            import random
            rng = rng or random.Random(0)
            triples = ((rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(sample or 20000))
        for a, b, c in triples:
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)):
                return False
        return all(self.mul(0, i) == i == self.mul(i, 0) and self.mul(i, self.inv(i)) == 0 for i in range(n))

    # ---------------------------------------------------------- closures

    def closure(self, gens: Iterable[int], start: int = 1) -> int:
        """Bitset of the subgroup generated by ``gens`` and the subgroup ``start``."""
        return self._join(start, list(iter_bits(start)) + list(gens))

    def subgroup_from_seeds(self, seeds: Iterable[int], start: int = 1) -> tuple[int, list[int]]:
        """Subgroup generated by ``seeds``, built incrementally; returns (bitset, generators used)."""
        mask, used = start, []
        for s in seeds:
            if not (mask >> s) & 1:
                used.append(s)
                mask = self._join(mask, used)
        return mask, used

    def _join(self, mask: int, gens: list[int]) -> int:
        # BFS from the current subgroup's elements using all generators so far
        frontier = list(iter_bits(mask))
        while frontier:
            nxt = []
            for x in frontier:
                for s in gens:
                    y = self.mul(x, s)
                    if not (mask >> y) & 1:
                        mask |= 1 << y
                        nxt.append(y)
            frontier = nxt
        return mask

    def normal_closure(self, seeds: Iterable[int]) -> int:
        mask, used = self.subgroup_from_seeds(seeds)
        gens = self.generators()
        changed = True
        while changed:
            changed = False
            for h in list(used):
                for x in gens:
                    c = self.conjugate(h, x)
                    if not (mask >> c) & 1:
                        used.append(c)
                        mask = self._join(mask, used)
                        changed = True
        return mask

    def generators(self) -> list[int]:
        """A small generating set found greedily (not necessarily minimal)."""
        if self._gens is None:
            _, self._gens = self.subgroup_from_seeds(range(1, self.order))
        return self._gens

    def left_coset(self, g: int, mask: int) -> int:
        out = 0
        for h in iter_bits(mask):
            out |= 1 << self.mul(g, h)
        return out

    def is_subgroup(self, mask: int) -> bool:
        if not mask & 1:
            return False
        members = list(iter_bits(mask))
        return all((mask >> self.mul(a, b)) & 1 for a in members for b in members)

    def is_normal(self, mask: int) -> bool:
        return all((mask >> self.conjugate(h, x)) & 1 for h in iter_bits(mask) for x in self.generators())

    # ----------------------------------------------------------- export

    def multiplication_table(self, budget: int = DEFAULT_ORDER_BUDGET) -> list[list[int]]:
        if self.order > budget:
            raise BudgetExceeded(f"order {self.order} exceeds table budget {budget}")
        return [[self.mul(i, j) for j in range(self.order)] for i in range(self.order)]

    def to_csv(self, budget: int = DEFAULT_ORDER_BUDGET) -> str:
        """Row-major multiplication table of element indices."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.multiplication_table(budget):
            w.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True)
class SubgroupSet:
    """A subgroup of a :class:`FiniteGroupTable` stored as a bitset."""

    table: FiniteGroupTable = field(compare=False, hash=False, repr=False)
    mask: int

    @property
    def order(self) -> int:
        return self.mask.bit_count()

    @property
    def index(self) -> int:
        return self.table.order // self.order

    def __contains__(self, i: int) -> bool:
        return bool((self.mask >> i) & 1)

    def elements(self) -> list[int]:
        return list(iter_bits(self.mask))

    def labels(self) -> list[str]:
        return [self.table.labels[i] for i in iter_bits(self.mask)]

    def __repr__(self) -> str:
        return f"SubgroupSet(order={self.order}, index={self.index})"


def _check_budget(order: int, budget: int, what: str):
    if order > budget:
        raise BudgetExceeded(f"{what} has order {order}, budget is {budget}")


# ------------------------------------------------------------- builders


def build_quotient(G: UniformGroupModel, n: int, budget: int = DEFAULT_ORDER_BUDGET) -> FiniteGroupTable:
    """G/P_{n+1}, with carrier the coordinate vectors mod p^n."""
    if not 1 <= n <= G.precision:
        raise ValueError(f"quotient level {n} must lie in 1..{G.precision}")
    order = G.p ** (G.dim * n)
    _check_budget(order, budget, f"G/P_{n + 1}")
    Q = G.at_precision(n)
    coords = list(itertools.product(range(G.p ** n), repeat=G.dim))
    elements = [Q.encode(lam) for lam in coords]
    labels = ["x(" + ",".join(map(str, lam)) + ")" for lam in coords]
    t = FiniteGroupTable(elements, Q.multiply, Q.invert, provenance="quotient",
                         name=f"{G.name}/P_{n + 1}", prime=G.p, labels=labels)
    t.model = Q
    return t


def quotient_map(F: FiniteGroupTable, target: FiniteGroupTable) -> list[int]:
    """Index map of the reduction G/P_{n+1} -> G/P_{m+1} between two quotient tables."""
    m = target.model.precision
    return [target.index[F.model.reduce(e, m)] for e in F.elements]


def build_wreath(p: int, n: int, budget: int = DEFAULT_ORDER_BUDGET) -> FiniteGroupTable:
    """C_p wr C_{p^n}: pairs (f, t), f: Z/p^n -> Z/p, t in Z/p^n acting by shifting coordinates."""
    L = p ** n
    order = p ** L * L
    _check_budget(order, budget, f"C_{p} wr C_{p}^{n}")

    def shift(f, s):
        return tuple(f[(j - s) % L] for j in range(L))

    def op(x, y):
        (f, s), (g, t) = x, y
        sg = shift(g, s)
        return tuple((a + b) % p for a, b in zip(f, sg)), (s + t) % L

    def inv(x):
        f, s = x
        return tuple(-a % p for a in shift(f, -s)), -s % L

    elements = [(f, t) for t in range(L) for f in itertools.product(range(p), repeat=L)]
    labels = [f"({''.join(map(str, f))};{t})" for f, t in elements]
    table = FiniteGroupTable(elements, op, inv, provenance="wreath", name=f"C{p} wr C{L}", prime=p, labels=labels)
    base = 0
    kernels = [0] * L
    for i, (f, t) in enumerate(elements):
        if t == 0:
            base |= 1 << i
            for j in range(L):
                if f[j] == 0:
                    kernels[j] |= 1 << i
    indicators = [table.index[(tuple(int(k == j) for k in range(L)), 0)] for j in range(L)]
    table.base = BaseDecomposition(base, kernels, indicators)
    return table


def multiplicative_order(a: int, q: int) -> int:
    k, x = 1, a % q
    while x != 1:
        x = x * a % q
        k += 1
    return k


def canonical_action_unit(q: int, order: int) -> int:
    """Smallest positive integer of multiplicative order exactly ``order`` mod the prime q."""
    for a in range(1, q):
        if multiplicative_order(a, q) == order:
            return a
    raise ValueError(f"no unit of order {order} mod {q}")


def build_metacyclic_G2(p: int, qlist: Sequence[int], m: int, budget: int = DEFAULT_ORDER_BUDGET) -> FiniteGroupTable:
    """(C_{q_1} x ... x C_{q_m}) ⋊ C_{p^m}; the generator acts on C_{q_i} by a unit of order p^i."""
    qlist = list(qlist)
    if len(qlist) != m:
        raise ValueError(f"need exactly m={m} primes, got {len(qlist)}")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if len(set(qlist)) != m:
        raise ValueError("the primes q_i must be distinct")
    for i, q in enumerate(qlist, start=1):
        if not is_prime(q):
            raise ValueError(f"q_{i} = {q} is not prime")
        if (q - 1) % p ** i:
            raise ValueError(f"p^{i} = {p ** i} does not divide q_{i} - 1 = {q - 1}")
    top = p ** m
    order = math.prod(qlist) * top
    _check_budget(order, budget, "metacyclic truncation")
    units = [canonical_action_unit(q, p ** i) for i, q in enumerate(qlist, start=1)]

    def act(c, s):
        return tuple(x * pow(a, s, q) % q for x, a, q in zip(c, units, qlist))

    def op(x, y):
        (c, s), (d, t) = x, y
        return tuple((a + b) % q for a, b, q in zip(c, act(d, s), qlist)), (s + t) % top

    def inv(x):
        c, s = x
        return tuple(-a % q for a, q in zip(act(c, -s % top), qlist)), -s % top

    elements = [(c, t) for t in range(top) for c in itertools.product(*(range(q) for q in qlist))]
    table = FiniteGroupTable(elements, op, inv, provenance="metacyclic",
                             name=f"G2(p={p}, q={tuple(qlist)})", prime=None,
                             labels=[f"({','.join(map(str, c))};{t})" for c, t in elements])
    table.action_units = units
    return table


def abelian_group(orders: Sequence[int], budget: int = DEFAULT_ORDER_BUDGET) -> FiniteGroupTable:
    """Z/n_1 x ... x Z/n_k, with its coordinate decomposition exposed as a base."""
    orders = list(orders)
    order = math.prod(orders)
    _check_budget(order, budget, "abelian group")
    elements = list(itertools.product(*(range(n) for n in orders)))

    def op(x, y):
        return tuple((a + b) % n for a, b, n in zip(x, y, orders))

    def inv(x):
        return tuple(-a % n for a, n in zip(x, orders))

    primes = {q for n in orders for q in prime_factors(n)}
    table = FiniteGroupTable(elements, op, inv, provenance="direct-product",
                             name="x".join(f"Z{n}" for n in orders),
                             prime=primes.pop() if len(primes) == 1 else None)
    kernels = [0] * len(orders)
    for i, e in enumerate(elements):
        for j, a in enumerate(e):
            if a == 0:
                kernels[j] |= 1 << i
    indicators = [table.index[tuple(int(k == j) for k in range(len(orders)))] for j in range(len(orders))]
    table.base = BaseDecomposition(table.full, kernels, indicators)
    return table


def direct_product(A: FiniteGroupTable, B: FiniteGroupTable, budget: int = DEFAULT_ORDER_BUDGET) -> FiniteGroupTable:
    _check_budget(A.order * B.order, budget, "direct product")
    elements = [(a, b) for a in A.elements for b in B.elements]

    def op(x, y):
        return A._op(x[0], y[0]), B._op(x[1], y[1])

    def inv(x):
        return A._inv_fn(x[0]), B._inv_fn(x[1])

    prime = A.prime if A.prime == B.prime else None
    return FiniteGroupTable(elements, op, inv, provenance="direct-product", name=f"({A.name})x({B.name})",
                            prime=prime, labels=[f"({A.labels[A.index[a]]},{B.labels[B.index[b]]})" for a, b in elements])


def subgroup_table(F: FiniteGroupTable, H: SubgroupSet) -> FiniteGroupTable:
    """The subgroup H as a table in its own right."""
    elems = [F.elements[i] for i in H.elements()]
    return FiniteGroupTable(elems, F._op, F._inv_fn, provenance=F.provenance, name=f"subgroup of {F.name}",
                            prime=F.prime, labels=H.labels())


# ------------------------------------------------------- subgroup lattice


@dataclass
class SubgroupLattice:
    """All subgroups of a table, each with the size of a smallest generating set."""

    table: FiniteGroupTable
    rank: dict[int, int]  # bitset -> d(H)
    generators: dict[int, list[int]]  # bitset -> a generating set of size d(H)

    def subgroups(self) -> list[SubgroupSet]:
        return [SubgroupSet(self.table, m) for m in sorted(self.rank, key=lambda m: (-m.bit_count(), m))]


def subgroup_lattice(F: FiniteGroupTable, budget: int = DEFAULT_ORDER_BUDGET,
                     cap: int = DEFAULT_SUBGROUP_CAP) -> SubgroupLattice:
    """Breadth-first search from the trivial subgroup, adjoining one element per step.

    The BFS depth at which a subgroup first appears is the least number of
    elements generating it.  Adjoining ``g`` and ``g*h`` (h in H) gives the
    same subgroup, so one element per left coset is tried.
    """
    if F._lattice is not None:
        return F._lattice
    _check_budget(F.order, budget, F.name)
    dist = {1: 0}
    gens: dict[int, list[int]] = {1: []}
    frontier = [1]
    while frontier:
        nxt = []
        for H in frontier:
            covered = H
            for g in range(F.order):
                if (covered >> g) & 1:
                    continue
                covered |= F.left_coset(g, H)
                K = F._join(H, gens[H] + [g])
                if K not in dist:
                    dist[K] = dist[H] + 1
                    gens[K] = gens[H] + [g]
                    nxt.append(K)
                    if len(dist) > cap:
                        raise BudgetExceeded(f"more than {cap} subgroups")
        frontier = nxt
    F._lattice = SubgroupLattice(F, dist, gens)
    return F._lattice


def _subgroups_above(F: FiniteGroupTable, N: int, cap: int) -> dict[int, list[int]]:
    """Every subgroup containing the subgroup N, each with a generating set over N."""
    _, base_gens = F.subgroup_from_seeds(iter_bits(N))
    found = {N: base_gens}
    frontier = [N]
    while frontier:
        nxt = []
        for H in frontier:
            covered = H
            for g in range(F.order):
                if (covered >> g) & 1:
                    continue
                covered |= F.left_coset(g, H)
                gens = found[H] + [g]
                K = F._join(H, gens)
                if K not in found:
                    found[K] = gens
                    nxt.append(K)
                    if len(found) > cap:
                        raise BudgetExceeded(f"more than {cap} subgroups")
        frontier = nxt
    return found


def enumerate_subgroups(F: FiniteGroupTable, max_index: int | None = None,
                        budget: int = DEFAULT_ORDER_BUDGET, cap: int = DEFAULT_SUBGROUP_CAP) -> list[SubgroupSet]:
    """Every subgroup of index <= max_index (all subgroups when None), largest first.

    In a p-group a subgroup of index at most p^j contains g^(p^j) for every
    g (an element of p-power order moves the p^j cosets in cycles of length
    dividing p^j), so the search starts from the subgroup those powers
    generate.
    """
    _check_budget(F.order, budget, F.name)
    p = F.prime
    if max_index is not None and p is not None and _is_power_of(F.order, p) and max_index < F.order:
        q = 1
        while q * p <= max_index:
            q *= p
        N, _ = F.subgroup_from_seeds(F.power(g, q) for g in range(F.order))
        masks = list(_subgroups_above(F, N, cap))
    else:
        masks = list(subgroup_lattice(F, budget, cap).rank)
    subs = [SubgroupSet(F, m) for m in sorted(masks, key=lambda m: (-m.bit_count(), m))]
    if max_index is None:
        return subs
    return [H for H in subs if F.order // H.order <= max_index]


def subgroup_generators(F: FiniteGroupTable, H: SubgroupSet) -> list[int]:
    """A generating set for H (minimal when the full lattice is cached)."""
    if F._lattice is not None:
        return F._lattice.generators[H.mask]
    return F.subgroup_from_seeds(H.elements())[1]


def min_generators(F: FiniteGroupTable, budget: int = DEFAULT_ORDER_BUDGET) -> int:
    """d(F), the size of a smallest generating set."""
    return subgroup_lattice(F, budget).rank[F.full]


def rank_of(F: FiniteGroupTable, budget: int = DEFAULT_ORDER_BUDGET) -> int:
    """Largest d(H) over all subgroups H."""
    return max(subgroup_lattice(F, budget).rank.values())


def maximal_subgroups(F: FiniteGroupTable, budget: int = DEFAULT_ORDER_BUDGET) -> list[SubgroupSet]:
    proper = [m for m in subgroup_lattice(F, budget).rank if m != F.full]
    out = []
    for m in proper:
        if not any(o != m and (o & m) == m for o in proper):
            out.append(SubgroupSet(F, m))
    return sorted(out, key=lambda H: H.mask)


def frattini(F: FiniteGroupTable, budget: int = DEFAULT_ORDER_BUDGET) -> SubgroupSet:
    """Intersection of all maximal subgroups."""
    mask = F.full
    for M in maximal_subgroups(F, budget):
        mask &= M.mask
    return SubgroupSet(F, mask)


# ------------------------------------------------------------ series


def _require_p_group(F: FiniteGroupTable, p: int):
    if not _is_power_of(F.order, p):
        raise NotAPGroup(f"{F.name} has order {F.order}, not a power of {p}")


def lower_p_series(F: FiniteGroupTable, p: int) -> list[SubgroupSet]:
    """P_1 = F, P_{n+1} = P_n^p [P_n, F], down to the trivial subgroup (included).

    P_{n+1} is computed as the normal closure of the p-th powers of P_n and
    the commutators of P_n with a generating set of F.
    """
    _require_p_group(F, p)
    chain = [SubgroupSet(F, F.full)]
    gens = F.generators()
    while chain[-1].mask != 1:
        P = chain[-1].elements()
        seeds = [F.power(h, p) for h in P] + [F.commutator(h, x) for h in P for x in gens]
        nxt = F.normal_closure(seeds)
        if nxt == chain[-1].mask:
            raise NotAPGroup("lower p-series stalled")
        chain.append(SubgroupSet(F, nxt))
    return chain


def centre(F: FiniteGroupTable) -> int:
    gens = F.generators()
    mask = 0
    for i in range(F.order):
        if all(F.mul(i, x) == F.mul(x, i) for x in gens):
            mask |= 1 << i
    return mask


def upper_central_series(F: FiniteGroupTable) -> list[int]:
    gens = F.generators()
    series = [1]
    while True:
        Z = series[-1]
        nxt = 0
        for i in range(F.order):
            if all((Z >> F.commutator(i, x)) & 1 for x in gens):
                nxt |= 1 << i
        if nxt == Z:
            return series
        series.append(nxt)


def is_nilpotent(F: FiniteGroupTable) -> bool:
    return upper_central_series(F)[-1] == F.full


def sylow_decompose(F: FiniteGroupTable) -> list[tuple[int, SubgroupSet]]:
    """Sylow subgroups of a nilpotent group, verified to form an internal direct product."""
    if not is_nilpotent(F):
        raise NotNilpotent(f"{F.name} is not nilpotent")
    parts = []
    for q in prime_factors(F.order):
        mask = 0
        for i in range(F.order):
            if _is_power_of(F.element_order(i), q):
                mask |= 1 << i
        if not F.is_subgroup(mask):
            raise AssertionError(f"{q}-elements do not form a subgroup")
        parts.append((q, SubgroupSet(F, mask)))
    for (_, A), (_, B) in itertools.combinations(parts, 2):
        assert A.mask & B.mask == 1
        assert all(F.mul(a, b) == F.mul(b, a) for a in A.elements() for b in B.elements())
    assert math.prod(H.order for _, H in parts) == F.order
    return parts


# ------------------------------------------------- sifted (implicit) subgroups


class SiftedSubgroup:
    """A subgroup of the model quotient ``Q`` (= G/P_{N+1}) without enumerating it.

    For each congruence depth k the structure keeps elements whose layer
    vectors are linearly independent.  ``sift`` divides an element by
    products of those, level by level; it ends at the identity exactly for
    members once the generating set is closed under p-th powers and pairwise
    commutators, which :meth:`adjoin` maintains.
    """

    def __init__(self, Q: UniformGroupModel):
        self.Q = Q
        self.levels: dict[int, list] = {k: [] for k in range(1, Q.precision + 1)}
        self._solvers: dict[int, LinearSolver | None] = {}
        self._pow = {}

    @property
    def basis(self) -> list:
        return [b for k in sorted(self.levels) for b in self.levels[k]]

    @property
    def log_order(self) -> int:
        return sum(len(v) for v in self.levels.values())

    @property
    def order(self) -> int:
        return self.Q.p ** self.log_order

    def _solver(self, k):
        s = self._solvers.get(k)
        if s is None and self.levels[k]:
            s = LinearSolver([self.Q.congruence_layer(b, k) for b in self.levels[k]], self.Q.p)
            self._solvers[k] = s
        return s

    def _b_pow(self, b, c):
        key = (b, c)
        r = self._pow.get(key)
        if r is None:
            r = self.Q.power(b, c)
            self._pow[key] = r
        return r

    def sift(self, g):
        """Return ``None`` for members, else (depth, residual) where sifting stopped."""
        Q = self.Q
        r = g
        ident = Q.identity
        while r != ident:
            k = Q.congruence_depth(r)
            s = self._solver(k)
            c = s.solve(Q.congruence_layer(r, k)) if s is not None else None
            if c is None:
                return k, r
            u = Q.product(self._b_pow(b, ci) for b, ci in zip(self.levels[k], c) if ci)
            r = Q.multiply(Q.invert(u), r)
        return None

    def __contains__(self, g) -> bool:
        return self.sift(g) is None

    def adjoin(self, elements: Iterable) -> bool:
        """Add elements and close up; returns whether the subgroup grew."""
        queue = list(elements)
        grew = False
        Q = self.Q
        while queue:
            g = queue.pop()
            res = self.sift(g)
            if res is None:
                continue
            k, r = res
            others = self.basis
            self.levels[k].append(r)
            self._solvers.pop(k, None)
            grew = True
            queue.append(Q.power(r, Q.p))
            queue.extend(Q.commutator(r, b) for b in others)
        return grew

    def normal_closure_in(self, conjugators: Sequence) -> "SiftedSubgroup":
        Q = self.Q
        changed = True
        while changed:
            changed = False
            for b in self.basis:
                for x in conjugators:
                    if self.adjoin([Q.conjugate(b, x)]):
                        changed = True
        return self

    @classmethod
    def generated_by(cls, Q: UniformGroupModel, gens: Iterable) -> "SiftedSubgroup":
        H = cls(Q)
        H.adjoin(gens)
        return H


def layered_lower_p_series(G: UniformGroupModel, n: int) -> list[SiftedSubgroup]:
    """Lower p-series of G/P_{n+1} computed with sifted subgroups (trivial term included).

    Only group operations and subgroup membership are used: P_1 is generated
    by the model basis, and P_{k+1} is the normal closure of the p-th powers
    of a generating set of P_k and its commutators with the basis.
    """
    Q = G.at_precision(n)
    X = list(Q.basis)
    P = SiftedSubgroup.generated_by(Q, X)
    if P.log_order != Q.dim * n:
        raise AssertionError(f"basis generates a subgroup of order p^{P.log_order}, expected p^{Q.dim * n}")
    chain = [P]
    while P.log_order:
        gens = P.basis
        seeds = [Q.power(y, Q.p) for y in gens] + [Q.commutator(y, x) for y in gens for x in X]
        nxt = SiftedSubgroup.generated_by(Q, seeds).normal_closure_in(X)
        if nxt.log_order >= P.log_order:
            raise NotAPGroup("lower p-series stalled")
        chain.append(nxt)
        P = nxt
    return chain


def series_level(chain: Sequence, g) -> int:
    """Largest n with g in the n-th term (1-based) of a descending chain."""
    level = 0
    for H in chain:
        if g in H:
            level += 1
        else:
            break
    return level
