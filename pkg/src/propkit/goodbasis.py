"""Good bases of open subgroups of a uniform model.

A tuple (h_1, ..., h_d) with levels n_i = omega(h_i) is a good basis when the
levels are nondecreasing and the layer vectors pi_{n_i}(h_i) are linearly
independent; the subgroup it spans is then {h_1^l_1 ... h_d^l_d}, of index
p^(sum(n_i - 1)).

Every open subgroup H gets a canonical good basis.  With V_n = pi_n(H ∩ P_n)
(an increasing chain of subspaces of F_p^d), the basis elements at level n
have as layer vectors the rows of the reduced echelon form of V_n whose pivot
is new at level n, and every higher coordinate digit is reduced modulo V_k.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import BudgetExceeded, NotOpenAtPrecision
from .finitep import SiftedSubgroup, build_quotient, enumerate_subgroups, subgroup_generators
from .linalg import LinearSolver, reduce_mod_span, rref
from .padic import vp
from .uniform import Element, UniformGroupModel

DEFAULT_SAMPLES = 200
DEFAULT_EXHAUSTIVE_BUDGET = 20_000


# -------------------------------------------------------------- handles


@dataclass(frozen=True)
class OpenSubgroupHandle:
    """An open subgroup, stored as its canonical good basis.

    Equality compares the canonical forms, so equal handles denote the same
    subgroup.
    """

    model: UniformGroupModel = field(compare=False, repr=False)
    group: str
    levels: tuple[int, ...]
    coordinates: tuple[tuple[int, ...], ...]
    elements: tuple[Element, ...] = field(compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return tuple(zip(self.levels, self.coordinates))

    @property
    def index(self) -> int:
        return index(self)

    def to_text(self) -> str:
        return ";".join(f"{n}:x({','.join(map(str, c))})" for n, c in self.key)

    def __contains__(self, g: Element) -> bool:
        return contains(self, g)


def parse_handle(G: UniformGroupModel, text: str) -> OpenSubgroupHandle:
    """Inverse of :meth:`OpenSubgroupHandle.to_text` (the basis is re-canonicalised)."""
    elems = []
    for part in text.split(";"):
        level, _, rest = part.strip().partition(":")
        elems.append(G.parse_element(rest))
    return good_basis_from_generators(G, elems)


@dataclass
class GoodBasisReport:
    ok: bool
    levels: tuple
    failures: list[str]
    checked: dict[str, str]

    @property
    def first_failure(self) -> str | None:
        return self.failures[0] if self.failures else None

    def __bool__(self) -> bool:
        return self.ok


# ------------------------------------------------------------- helpers


def _digit_vector(G: UniformGroupModel, lam: Sequence[int], k: int) -> tuple[int, ...]:
    s = G.p ** (k - 1)
    return tuple((x // s) % G.p for x in lam)


def _min_level(lam: Sequence[int], levels: Sequence[int], p: int, cap: int) -> int:
    best = cap
    for l, n in zip(lam, levels):
        if l:
            best = min(best, n + vp(l, p))
    return best


class _LevelData:
    """Per-level elements of H ∩ P_k whose layer coordinates span V_k."""

    def __init__(self, G: UniformGroupModel, sifted: SiftedSubgroup):
        self.G = G
        self.elements: dict[int, list] = {}
        self.vectors: dict[int, list] = {}
        self.solvers: dict[int, LinearSolver] = {}
        self.rref: dict[int, tuple[list, list]] = {}
        for k in range(1, G.precision + 1):
            E = sifted.levels[k]
            C = [G.layer_coordinates(b, k) for b in E]
            self.elements[k] = E
            self.vectors[k] = C
            self.solvers[k] = LinearSolver(C, G.p, dim=G.dim)
            self.rref[k] = rref(C, G.p)

    def element_with_layer(self, k: int, target: Sequence[int]) -> Element:
        """An element u of H ∩ P_k with pi_k(u) = target (target must lie in V_k)."""
        c = self.solvers[k].solve(target)
        if c is None:
            raise AssertionError("target outside V_k")
        G = self.G
        return G.product(G.power(b, ci) for b, ci in zip(self.elements[k], c) if ci)


def _canonical_basis(G: UniformGroupModel, data: _LevelData) -> tuple[list[int], list[Element]]:
    p, N = G.p, G.precision
    levels, elements = [], []
    seen: set[int] = set()
    for n in range(1, N + 1):
        rows, pivots = data.rref[n]
        for row, c in zip(rows, pivots):
            if c in seen:
                continue
            seen.add(c)
            h = data.element_with_layer(n, row)
            for k in range(n + 1, N + 1):
                lam = G.decode_ints(h)
                delta = _digit_vector(G, lam, k)
                rrows, rpiv = data.rref[k]
                rep = reduce_mod_span(delta, rrows, rpiv, p)
                diff = tuple((a - b) % p for a, b in zip(delta, rep))
                if any(diff):
                    u = data.element_with_layer(k, diff)
                    h = G.multiply(h, G.invert(u))
            levels.append(n)
            elements.append(h)
    return levels, elements


def _handle(G: UniformGroupModel, levels, elements) -> OpenSubgroupHandle:
    return OpenSubgroupHandle(G, G.name, tuple(levels), tuple(G.decode_ints(h) for h in elements), tuple(elements))


# -------------------------------------------------------------- operations


def good_basis_from_generators(G: UniformGroupModel, gens: Iterable[Element]) -> OpenSubgroupHandle:
    """Canonical good basis of the closed subgroup generated by ``gens``.

    Raises NotOpenAtPrecision when fewer than d independent layer directions
    appear at levels <= N.
    """
    gens = list(gens)
    for g in gens:
        G.check(g)
    sifted = SiftedSubgroup.generated_by(G, gens)
    data = _LevelData(G, sifted)
    top = len(data.rref[G.precision][1])
    if top < G.dim:
        raise NotOpenAtPrecision(
            f"subgroup has only {top} of {G.dim} layer directions by level {G.precision}; "
            "not open, or precision too low to certify")
    levels, elements = _canonical_basis(G, data)
    return _handle(G, levels, elements)


def whole_group(G: UniformGroupModel) -> OpenSubgroupHandle:
    return good_basis_from_generators(G, G.basis)


def _sift_powers(handle: OpenSubgroupHandle, G: UniformGroupModel):
    # tables[i][k] = h_i^(p^(k - n_i)) for levels k >= n_i
    cache = handle.__dict__.get("_sift_cache")
    if cache is not None and cache[0] is G:
        return cache[1]
    p = G.p
    tables = []
    for h, n in zip(handle.elements, handle.levels):
        h = G.reduce(h, G.precision) if G is not handle.model else h
        row = {}
        x = h
        for k in range(n, G.precision + 1):
            row[k] = x
            x = G.power(x, p)
        tables.append(row)
    solvers = {}
    for k in range(1, G.precision + 1):
        idx = [i for i, n in enumerate(handle.levels) if n <= k]
        vecs = [G.layer_coordinates(tables[i][k], k) for i in idx]
        solvers[k] = (idx, LinearSolver(vecs, p, dim=G.dim)) if idx else (idx, None)
    object.__setattr__(handle, "_sift_cache", (G, (tables, solvers)))
    return tables, solvers


def contains(handle: OpenSubgroupHandle, g: Element, model: UniformGroupModel | None = None) -> bool:
    """Membership by sifting g through the good basis.

    ``model`` may be a lower-precision version of the handle's model, for
    membership of images in a finite quotient.
    """
    G = model or handle.model
    tables, solvers = _sift_powers(handle, G)
    r = g
    ident = G.identity
    while r != ident:
        k = G.congruence_depth(r)
        if k > G.precision:
            return True
        idx, solver = solvers[k]
        if solver is None:
            return False
        c = solver.solve(G.layer_coordinates(r, k))
        if c is None:
            return False
        u = G.product(G.power(tables[i][k], ci) for i, ci in zip(idx, c) if ci)
        r = G.multiply(G.invert(u), r)
    return True


def index(handle: OpenSubgroupHandle) -> int:
    """[G : H] = p^(sum(n_i - 1))."""
    return handle.model.p ** sum(n - 1 for n in handle.levels)


def same_subgroup(a: OpenSubgroupHandle, b: OpenSubgroupHandle) -> bool:
    if a.model != b.model:
        raise ValueError(f"handles live in different models ({a.group} vs {b.group})")
    return a == b


def mutually_contained(a: OpenSubgroupHandle, b: OpenSubgroupHandle) -> bool:
    """Containment-based equality, independent of the canonical form."""
    return all(contains(b, h) for h in a.elements) and all(contains(a, h) for h in b.elements)


def is_good_basis(G: UniformGroupModel, elements: Sequence[Element], samples: int = DEFAULT_SAMPLES,
                  seed: int = 0, exhaustive_budget: int = DEFAULT_EXHAUSTIVE_BUDGET) -> GoodBasisReport:
    """Check the good-basis conditions for a d-tuple.

    (i) levels nondecreasing; (ii) every h_i nontrivial at working precision;
    (iii) the product set {h_1^l_1 ... h_d^l_d} is a subgroup; (iv) omega of
    each product equals min(n_i + v(l_i)).  (iii) and (iv) are exhaustive in
    G/P_{m+1} for m the largest level when that quotient fits the budget, and
    additionally sampled at full precision.
    """
    elements = list(elements)
    failures: list[str] = []
    checked: dict[str, str] = {}
    if len(elements) != G.dim:
        return GoodBasisReport(False, (), [f"length: expected {G.dim} elements, got {len(elements)}"], {})
    for g in elements:
        G.check(g)
    if any(h == G.identity for h in elements):
        failures.append("(ii): some h_i is trivial at working precision")
        return GoodBasisReport(False, tuple(str(G.omega(h)) for h in elements), failures, {"(ii)": "fail"})
    checked["(ii)"] = "exact"
    levels = [G.omega(h).value for h in elements]
    if any(a > b for a, b in zip(levels, levels[1:])):
        failures.append(f"(i): levels {tuple(levels)} are not nondecreasing")
    checked["(i)"] = "exact"

    p, d = G.p, G.dim
    m = max(levels)
    Q = G.at_precision(m)
    size = p ** (d * m)
    if size <= exhaustive_budget:
        hs = [Q.reduce(h, m) for h in elements]
        powers = [[Q.identity] for _ in hs]
        for i, h in enumerate(hs):
            for _ in range(1, p ** m):
                powers[i].append(Q.multiply(powers[i][-1], h))
        S = set()
        bad_iv = None
        mod = p ** m

        def walk(i, prefix, lam):
            nonlocal bad_iv
            if i == d:
                S.add(prefix)
                if bad_iv is None:
                    want = _min_level(lam, levels, p, m + 1)
                    if min(Q.congruence_depth(prefix), m + 1) != want:
                        bad_iv = tuple(lam)
                return
            for l in range(mod):
                walk(i + 1, Q.multiply(prefix, powers[i][l]), lam + [l])

        walk(0, Q.identity, [])
        closed = all(Q.multiply(s, h) in S for s in S for h in hs)
        if not closed:
            failures.append(f"(iii): product set is not closed under multiplication in G/P_{m + 1}")
        if bad_iv is not None:
            failures.append(f"(iv): omega formula fails at lambda={bad_iv} in G/P_{m + 1}")
        checked["(iii)"] = checked["(iv)"] = f"exhaustive in G/P_{m + 1} ({size} products)"
    else:
        checked["(iii)"] = checked["(iv)"] = "sampled only"

    rng = random.Random(seed)
    N = G.precision
    mod = p ** N
    tab = _DigitPowers(G, elements)
    sample_fail_iv = sample_fail_iii = None
    for _ in range(samples):
        lam = [rng.randrange(mod) for _ in range(d)]
        x = tab.product(lam)
        want = _min_level(lam, levels, p, N + 1)
        if sample_fail_iv is None and min(G.congruence_depth(x), N + 1) != want:
            sample_fail_iv = tuple(lam)
        mu = [rng.randrange(mod) for _ in range(d)]
        if sample_fail_iii is None and not _in_product_set(G, tab, levels, G.multiply(x, tab.product(mu))):
            sample_fail_iii = (tuple(lam), tuple(mu))
    if sample_fail_iii is not None:
        failures.append(f"(iii): sampled product x(lambda)x(mu) left the product set, (lambda, mu)={sample_fail_iii}")
    if sample_fail_iv is not None:
        failures.append(f"(iv): sampled omega mismatch at lambda={sample_fail_iv}")
    checked["samples"] = str(samples)
    return GoodBasisReport(not failures, tuple(levels), failures, checked)


class _DigitPowers:
    """h_i^lam via precomputed tables of h_i^(j p^t)."""

    def __init__(self, G: UniformGroupModel, elements: Sequence[Element]):
        self.G = G
        self.tables = []
        for h in elements:
            per = []
            base = h
            for _ in range(G.precision):
                row = [G.identity]
                for _ in range(1, G.p):
                    row.append(G.multiply(row[-1], base))
                per.append(row)
                base = G.multiply(row[-1], base)
            self.tables.append(per)

    def power(self, i: int, lam: int) -> Element:
        G, p = self.G, self.G.p
        lam %= p ** G.precision
        out, t = G.identity, 0
        while lam:
            lam, digit = divmod(lam, p)
            if digit:
                out = G.multiply(out, self.tables[i][t][digit])
            t += 1
        return out

    def product(self, lam: Sequence[int]) -> Element:
        return self.G.product(self.power(i, l) for i, l in enumerate(lam))


def _in_product_set(G, tab: _DigitPowers, levels, g) -> bool:
    """Whether g = h_1^l_1 ... h_d^l_d, by peeling layer digits in order."""
    p = G.p
    d = len(levels)
    lam = [0] * d
    for k in range(1, G.precision + 1):
        r = G.multiply(G.invert(tab.product(lam)), g)
        if r == G.identity:
            return True
        depth = G.congruence_depth(r)
        if depth < k:
            return False
        if depth > k:
            continue
        idx = [i for i, n in enumerate(levels) if n <= k]
        if not idx:
            return False
        vecs = [G.layer_coordinates(tab.power(i, p ** (k - levels[i])), k) for i in idx]
        c = LinearSolver(vecs, p, dim=G.dim).solve(G.layer_coordinates(r, k))
        if c is None:
            return False
        for i, ci in zip(idx, c):
            lam[i] += ci * p ** (k - levels[i])
    return tab.product(lam) == g


def is_good_basis_handle(handle: OpenSubgroupHandle, **kw) -> GoodBasisReport:
    return is_good_basis(handle.model, handle.elements, **kw)


# ----------------------------------------------------------- enumeration


def _p_power_generators(G: UniformGroupModel, k: int) -> list[Element]:
    """Generators of P_{k+1}: the basis elements raised to p^k."""
    return [G.power(x, G.p ** k) for x in G.basis]


def _check_enum_budget(G, k, budget):
    size = G.p ** (G.dim * k)
    if size > budget:
        raise BudgetExceeded(f"G/P_{k + 1} has order {size}, budget is {budget}")


def enumerate_open_subgroups(G: UniformGroupModel, k: int, method: str = "quotient",
                             budget: int = 4096) -> list[OpenSubgroupHandle]:
    """All open subgroups of index <= p^k, each exactly once, ordered by (index, canonical key).

    A subgroup of index p^j contains P_{j+1}, so everything lives in the
    finite quotient G/P_{k+1}.  ``method="quotient"`` enumerates subgroups of
    that quotient by brute force and lifts them; ``method="canonical"``
    enumerates candidate canonical forms directly and keeps those that
    reproduce themselves.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return [whole_group(G)]
    if k > G.precision:
        raise NotOpenAtPrecision(f"index p^{k} needs precision >= {k}, model has {G.precision}")
    _check_enum_budget(G, k, budget)
    if method == "quotient":
        handles = _enumerate_via_quotient(G, k, budget)
    elif method == "canonical":
        handles = _enumerate_canonical(G, k)
    else:
        raise ValueError(f"unknown enumeration method {method!r}")
    return sorted(handles, key=lambda h: (index(h), h.key))


def _enumerate_via_quotient(G, k, budget):
    F = build_quotient(G, k, budget=budget)
    Fq = F.model
    tail = _p_power_generators(G, k)
    out: dict[tuple, OpenSubgroupHandle] = {}
    for H in enumerate_subgroups(F, G.p ** k, budget=budget):
        lifts = [G.encode(Fq.decode_ints(F.elements[i])) for i in subgroup_generators(F, H)]
        h = good_basis_from_generators(G, lifts + tail)
        out.setdefault(h.key, h)
    return list(out.values())


def _candidate_structures(d: int, k: int):
    """Level assignments (one level per pivot column) with sum(n_i - 1) <= k."""
    for levels in itertools.product(range(1, k + 2), repeat=d):
        if sum(n - 1 for n in levels) <= k:
            yield levels


def _enumerate_canonical(G: UniformGroupModel, k: int) -> list[OpenSubgroupHandle]:
    p, d = G.p, G.dim
    out: dict[tuple, OpenSubgroupHandle] = {}
    for col_level in _candidate_structures(d, k):
        # pivots() at level n: columns whose level is <= n
        order = sorted(range(d), key=lambda c: (col_level[c], c))
        top = max(col_level)
        free_slots = []  # (basis position, level offset, column)
        for pos, c in enumerate(order):
            n = col_level[c]
            piv_n = {j for j in range(d) if col_level[j] <= n}
            for j in range(c + 1, d):
                if j not in piv_n:
                    free_slots.append((pos, n, j))
            for lev in range(n + 1, top):
                piv = {j for j in range(d) if col_level[j] <= lev}
                for j in range(d):
                    if j not in piv:
                        free_slots.append((pos, lev, j))
        for digits in itertools.product(range(p), repeat=len(free_slots)):
            lam = [[0] * d for _ in range(d)]
            for pos, c in enumerate(order):
                lam[pos][c] = p ** (col_level[c] - 1)
            for (pos, lev, j), a in zip(free_slots, digits):
                lam[pos][j] += a * p ** (lev - 1)
            key = tuple((col_level[c], tuple(lam[pos])) for pos, c in enumerate(order))
            try:
                h = good_basis_from_generators(G, [G.encode(x) for x in lam])
            except NotOpenAtPrecision:
                continue
            if h.key == key:
                out[key] = h
    return list(out.values())


def subgroup_counts(G: UniformGroupModel, k: int, method: str = "quotient", budget: int = 4096) -> dict[int, int]:
    """a_{p^j} for 1 <= j <= k: the number of open subgroups of index exactly p^j."""
    counts = {j: 0 for j in range(1, k + 1)}
    for h in enumerate_open_subgroups(G, k, method=method, budget=budget):
        j = sum(n - 1 for n in h.levels)
        if j >= 1:
            counts[j] += 1
    return counts


def oracle_subgroup_counts(G: UniformGroupModel, k: int, budget: int = 4096) -> dict[int, int]:
    """The same counts straight from brute-force subgroup enumeration of G/P_{k+1}."""
    F = build_quotient(G, k, budget=budget)
    counts = {j: 0 for j in range(1, k + 1)}
    for H in enumerate_subgroups(F, G.p ** k, budget=budget):
        j = vp(H.index, G.p)
        if j >= 1:
            counts[j] += 1
    return counts


def random_open_subgroup(G: UniformGroupModel, rng: random.Random, max_level: int = 3,
                         extra: int | None = None) -> OpenSubgroupHandle:
    """A random open subgroup with all good-basis levels <= max_level.

    Generated by a few random elements of random depth together with
    generators of P_{max_level}.
    """
    count = rng.randint(0, G.dim) if extra is None else extra
    gens = [G.random_element(rng, level=rng.randint(1, max_level)) for _ in range(count)]
    return good_basis_from_generators(G, gens + _p_power_generators(G, max_level - 1))
