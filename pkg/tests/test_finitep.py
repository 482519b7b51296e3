import itertools
import random

import pytest

from oracles import closure
from propkit import finitep as fp
from propkit.errors import BudgetExceeded, NotAPGroup, NotNilpotent
from propkit.uniform import UniformGroupModel, builtin_models


def orders(chain):
    return [H.order for H in chain]


def sub_by_labels(F, H):
    return sorted(F.labels[i] for i in H.elements())


# ---------------------------------------------------------------- builders


def test_quotient_examples():
    Z9 = fp.build_quotient(UniformGroupModel("abelian", 3, 1, 4), 2)
    assert Z9.order == 9 and Z9.exponent() == 9
    V4 = fp.build_quotient(UniformGroupModel("abelian", 2, 2, 4), 1)
    assert V4.order == 4 and V4.exponent() == 2 and V4.is_abelian()
    S = fp.build_quotient(UniformGroupModel("sl2", 3, None, 4), 1)
    assert S.order == 27 and S.is_abelian() and S.exponent() == 3


@pytest.mark.parametrize("idx", range(4))
def test_quotient_orders_and_axioms(idx):
    G = builtin_models(3)[idx]
    for n in (1, 2):
        if G.p ** (G.dim * n) > 4096:
            continue
        Q = fp.build_quotient(G, n)
        assert Q.order == G.p ** (G.dim * n)
        assert Q.verify_axioms(sample=300 if Q.order > 100 else None, rng=random.Random(n))


def test_quotient_budget():
    with pytest.raises(BudgetExceeded):
        fp.build_quotient(UniformGroupModel("gl", 3, 2, 4), 2)
    with pytest.raises(ValueError):
        fp.build_quotient(UniformGroupModel("abelian", 3, 2, 4), 5)


def test_wreath_examples():
    D8 = fp.build_wreath(2, 1)
    assert (D8.order, D8.is_abelian(), D8.exponent()) == (8, False, 4)
    assert fp.build_wreath(2, 2).order == 64
    assert fp.build_wreath(3, 1).order == 81
    with pytest.raises(BudgetExceeded):
        fp.build_wreath(2, 3, budget=1000)


def test_wreath_is_dihedral():
    D8 = fp.build_wreath(2, 1)
    # D8 has five involutions and two elements of order 4
    counts = sorted(D8.element_order(i) for i in range(8))
    assert counts == [1, 2, 2, 2, 2, 2, 4, 4]
    assert D8.verify_axioms()


@pytest.mark.parametrize("p,n", [(2, 1), (2, 2), (3, 1)])
def test_wreath_order_formula_and_base(p, n):
    W = fp.build_wreath(p, n)
    assert W.order == p ** (p ** n + n)
    base = W.base
    assert W.is_normal(base.base) and base.base.bit_count() == p ** (p ** n)
    assert all(W.is_subgroup(k) for k in base.kernels)


def test_metacyclic_examples():
    S3 = fp.build_metacyclic_G2(2, [3], 1)
    assert S3.order == 6 and not S3.is_abelian()
    assert fp.build_metacyclic_G2(2, [3, 5], 2).order == 60
    with pytest.raises(ValueError):
        fp.build_metacyclic_G2(2, [3, 4], 2)
    with pytest.raises(ValueError):
        fp.build_metacyclic_G2(3, [7, 11], 2)  # 9 does not divide 10
    with pytest.raises(ValueError):
        fp.build_metacyclic_G2(2, [3], 2)


def test_metacyclic_action_unit_is_canonical():
    assert fp.canonical_action_unit(5, 4) == 2
    assert fp.canonical_action_unit(3, 2) == 2
    assert fp.canonical_action_unit(13, 3) == 3
    for q, k in [(7, 3), (13, 4), (17, 8)]:
        u = fp.canonical_action_unit(q, k)
        assert fp.multiplicative_order(u, q) == k
        assert all(fp.multiplicative_order(v, q) != k for v in range(2, u))


def test_multiplication_table_csv():
    F = fp.abelian_group([2, 3])
    rows = F.to_csv().strip().splitlines()
    assert len(rows) == 6 and all(len(r.split(",")) == 6 for r in rows)
    table = F.multiplication_table()
    assert all(table[0][j] == j for j in range(6))


# ---------------------------------------------------------------- series, Frattini, rank


def test_lower_p_series_examples():
    assert orders(fp.lower_p_series(fp.abelian_group([9]), 3)) == [9, 3, 1]
    chain = fp.lower_p_series(fp.build_wreath(2, 1), 2)
    assert orders(chain) == [8, 2, 1]
    assert orders(fp.lower_p_series(fp.abelian_group([3, 3, 3]), 3)) == [27, 1]


def test_lower_p_series_terms_are_normal_and_descending():
    for F in [fp.build_wreath(2, 2), fp.build_wreath(3, 1), fp.abelian_group([4, 8])]:
        chain = fp.lower_p_series(F, F.prime)
        for a, b in zip(chain, chain[1:]):
            assert b.mask & a.mask == b.mask and b.mask != a.mask
            assert F.is_normal(b.mask)


def test_not_a_p_group():
    with pytest.raises(NotAPGroup):
        fp.lower_p_series(fp.abelian_group([6]), 2)


def test_frattini_examples():
    F = fp.abelian_group([4, 2])
    assert sub_by_labels(F, fp.frattini(F)) == sorted([str((0, 0)), str((2, 0))])
    assert fp.min_generators(F) == 2
    assert len(fp.maximal_subgroups(F)) == 3
    E = fp.abelian_group([3, 3, 3])
    assert fp.frattini(E).order == 1 and fp.min_generators(E) == 3
    assert fp.min_generators(fp.build_wreath(2, 1)) == 2


def test_rank_examples():
    assert fp.rank_of(fp.abelian_group([5, 5])) == 2
    assert fp.rank_of(fp.abelian_group([27])) == 1
    # every subgroup of D8 is generated by two elements
    assert fp.rank_of(fp.build_wreath(2, 1)) == 2


def test_min_generators_against_subset_search():
    for F in [fp.build_wreath(2, 1), fp.abelian_group([2, 4]), fp.build_metacyclic_G2(2, [3], 1)]:
        d = fp.min_generators(F)
        gen_by = lambda S: len(closure(F.mul, 0, list(S))) == F.order  # noqa: E731
        assert any(gen_by(S) for S in itertools.combinations(range(F.order), d))
        assert not any(gen_by(S) for S in itertools.combinations(range(F.order), d - 1))


@pytest.mark.parametrize("F", [fp.build_wreath(2, 1), fp.build_wreath(2, 2), fp.build_wreath(3, 1),
                               fp.abelian_group([4, 2]), fp.abelian_group([9, 3]),
                               fp.build_quotient(UniformGroupModel("sl2", 3, None, 2), 1)],
                         ids=lambda F: F.name)
def test_burnside_basis_theorem(F):
    phi = fp.frattini(F)
    assert F.prime ** fp.min_generators(F) == F.order // phi.order


# ---------------------------------------------------------------- enumeration


def test_enumeration_examples():
    V4 = fp.abelian_group([2, 2])
    assert [H.order for H in fp.enumerate_subgroups(V4, 2)] == [4, 2, 2, 2]
    assert [H.order for H in fp.enumerate_subgroups(fp.abelian_group([9]), 9)] == [9, 3, 1]
    index3 = [H for H in fp.enumerate_subgroups(fp.abelian_group([3, 3]), 3) if H.index == 3]
    assert len(index3) == 4


def test_d8_has_ten_subgroups():
    subs = fp.enumerate_subgroups(fp.build_wreath(2, 1))
    assert len(subs) == 10
    assert all(H.table.is_subgroup(H.mask) for H in subs)


def brute_subgroups(F):
    """Subgroups from closures of all pairs of elements, then joins, to a fixpoint."""
    found = {F.closure([g]) for g in range(F.order)}
    while True:
        new = {F.closure(list(fp.iter_bits(a | b))) for a in found for b in found} | found
        if new == found:
            return found
        found = new


@pytest.mark.parametrize("F", [fp.build_wreath(2, 1), fp.abelian_group([4, 2]), fp.build_metacyclic_G2(2, [3], 1),
                               fp.abelian_group([3, 3])], ids=lambda F: F.name)
def test_enumeration_matches_brute_force(F):
    assert {H.mask for H in fp.enumerate_subgroups(F)} == brute_subgroups(F)


@pytest.mark.parametrize("max_index", [1, 2, 4, 8])
def test_index_bounded_enumeration_agrees_with_full_lattice(max_index):
    F = fp.build_wreath(2, 2)
    bounded = {H.mask for H in fp.enumerate_subgroups(F, max_index)}
    F2 = fp.build_wreath(2, 2)
    full = {m for m in fp.subgroup_lattice(F2).rank if F2.order // m.bit_count() <= max_index}
    assert bounded == full


def test_enumeration_closed_under_conjugation_and_intersection():
    F = fp.build_wreath(2, 2)
    subs = {H.mask for H in fp.enumerate_subgroups(F, 8)}
    for m in subs:
        for g in range(F.order):
            conj = 0
            for h in fp.iter_bits(m):
                conj |= 1 << F.conjugate(h, g)
            assert conj in subs
    allsubs = {H.mask for H in fp.enumerate_subgroups(F)}
    for a, b in itertools.combinations(list(allsubs)[:60], 2):
        assert a & b in allsubs


def test_subgroup_cap():
    with pytest.raises(BudgetExceeded):
        fp.enumerate_subgroups(fp.abelian_group([2, 2, 2, 2]), cap=20)


# ---------------------------------------------------------------- quotient maps and uniformity


@pytest.mark.parametrize("G", [UniformGroupModel("abelian", 3, 2, 3), UniformGroupModel("sl2", 3, None, 3),
                               UniformGroupModel("gl", 2, 2, 3)], ids=lambda G: G.name)
def test_quotient_map_is_homomorphism(G):
    n = 2 if G.p ** (G.dim * 2) <= 4096 else 1
    big, small = fp.build_quotient(G, n), fp.build_quotient(G, 1)
    phi = fp.quotient_map(big, small)
    rng = random.Random(3)
    pairs = [(a, b) for a in range(big.order) for b in range(big.order)] if big.order <= 100 else \
        [(rng.randrange(big.order), rng.randrange(big.order)) for _ in range(3000)]
    for a, b in pairs:
        assert phi[big.mul(a, b)] == small.mul(phi[a], phi[b])


@pytest.mark.parametrize("G", builtin_models(3), ids=lambda G: G.name)
def test_series_layers_have_size_p_to_d(G):
    n = max(k for k in (1, 2, 3) if G.p ** (G.dim * k) <= 4096)
    chain = fp.lower_p_series(fp.build_quotient(G, n), G.p)
    assert len(chain) == n + 1
    assert all(a.order // b.order == G.p ** G.dim for a, b in zip(chain, chain[1:]))


@pytest.mark.parametrize("G", builtin_models(3), ids=lambda G: G.name)
def test_layered_series_matches_enumerative_series(G):
    n = max(k for k in (1, 2, 3) if G.p ** (G.dim * k) <= 4096)
    F = fp.build_quotient(G, n)
    chain = fp.lower_p_series(F, G.p)
    sifted = fp.layered_lower_p_series(G, n)
    assert [H.order for H in sifted] == orders(chain)
    for i, e in enumerate(F.elements):
        assert fp.series_level(sifted, e) == sum(i in H for H in chain)


def test_layered_series_at_depth_four():
    for G in builtin_models(4):
        chain = fp.layered_lower_p_series(G, 4)
        assert [H.log_order for H in chain] == [G.dim * k for k in (4, 3, 2, 1, 0)]


def test_sifted_subgroup_membership():
    G = UniformGroupModel("abelian", 3, 2, 3)
    H = fp.SiftedSubgroup.generated_by(G, [G.encode((3, 0)), G.encode((0, 1))])
    assert H.log_order == 2 + 3
    assert G.encode((6, 5)) in H and G.encode((1, 0)) not in H


# ---------------------------------------------------------------- nilpotency


def test_sylow_examples():
    parts = fp.sylow_decompose(fp.abelian_group([6]))
    assert [(q, H.order) for q, H in parts] == [(2, 2), (3, 3)]
    parts = fp.sylow_decompose(fp.abelian_group([4, 9]))
    assert [(q, H.order) for q, H in parts] == [(2, 4), (3, 9)]
    with pytest.raises(NotNilpotent):
        fp.sylow_decompose(fp.build_metacyclic_G2(2, [3], 1))


def test_sylow_of_nilpotent_nonabelian_product():
    F = fp.direct_product(fp.build_wreath(2, 1), fp.abelian_group([3]))
    assert fp.is_nilpotent(F)
    parts = fp.sylow_decompose(F)
    assert [(q, H.order) for q, H in parts] == [(2, 8), (3, 3)]
    assert not fp.is_nilpotent(fp.build_metacyclic_G2(2, [3, 5], 2))
