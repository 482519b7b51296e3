import itertools
import json
import random

import pytest

from oracles import brute_independence_dimension, brute_vc_dimension
from propkit import finitep as fp
from propkit import niplab as nl
from propkit.errors import PartitionInfeasible
from propkit.uniform import UniformGroupModel


def as_sets(fam):
    return [set(fp.iter_bits(s)) for s in fam.sets]


def klein():
    return fp.abelian_group([2, 2])


# ---------------------------------------------------------------- families


def test_coset_family_examples():
    fam = nl.coset_family(klein(), "index", max_index=2)
    assert len({K for K in fam.subgroups}) == 3 and len(fam) == 6
    assert fam.verify()
    W = fp.build_wreath(2, 1)
    base = nl.coset_family(W, "wreath-base")
    assert len(set(base.subgroups)) == 2
    for j, K in enumerate(W.base.kernels):
        assert {W.elements[i] for i in fp.iter_bits(K)} == {e for e in W.elements if e[1] == 0 and e[0][j] == 0}
    subs = [H.mask for H in fp.enumerate_subgroups(klein(), 2)][1:]
    assert nl.coset_family(klein(), "explicit", subgroups=subs).sets == fam.sets


def test_coset_family_errors():
    with pytest.raises(ValueError):
        nl.coset_family(klein(), "wreath-base")
    with pytest.raises(ValueError):
        nl.coset_family(klein(), "index")
    with pytest.raises(ValueError):
        nl.coset_family(klein(), "explicit", subgroups=[0b0110])
    with pytest.raises(ValueError):
        nl.coset_family(klein(), "lattice")


def test_family_sets_are_deduplicated():
    F = fp.abelian_group([4])
    fam = nl.coset_family(F, "index", max_index=4, proper=False)
    assert len(fam.sets) == len(set(fam.sets)) == 1 + 2 + 4


# ---------------------------------------------------------------- shattering


def test_independence_examples():
    W = fp.build_wreath(2, 1)
    rep = nl.independence_dimension(nl.coset_family(W, "wreath-base"), cap=2)
    assert rep.dimension == 2 and nl.replay(nl.coset_family(W, "wreath-base"), rep)
    F = fp.abelian_group([4])
    K = F.closure([2])
    two = nl.family_from_sets(F, [K, F.left_coset(1, K)])
    assert nl.independence_dimension(two).dimension == 1
    assert nl.independence_dimension(nl.coset_family(klein(), "index", max_index=2)).dimension <= 2


def test_vc_examples():
    F = fp.abelian_group([3])
    all_subsets = [sum(1 << i for i in S) for r in range(4) for S in itertools.combinations(range(3), r)]
    assert nl.vc_dimension(nl.family_from_sets(F, all_subsets)).dimension == 3
    G = fp.abelian_group([2, 4])
    part = nl.coset_family(G, "explicit", subgroups=[G.closure([1])])
    assert nl.vc_dimension(part).dimension == 1


def families():
    W1, W2 = fp.build_wreath(2, 1), fp.build_wreath(2, 2)
    yield "wreath21-base", nl.coset_family(W1, "wreath-base")
    yield "wreath22-base", nl.coset_family(W2, "wreath-base")
    yield "klein-index2", nl.coset_family(klein(), "index", max_index=2)
    yield "z4xz2-all", nl.coset_family(fp.abelian_group([4, 2]), "index", max_index=8, proper=False)
    yield "d8-index4", nl.coset_family(W1, "index", max_index=4)
    yield "s3-all", nl.coset_family(fp.build_metacyclic_G2(2, [3], 1), "index", max_index=6)


@pytest.mark.parametrize("name,fam", list(families()), ids=lambda x: x if isinstance(x, str) else "")
def test_dimensions_match_brute_force(name, fam):
    carrier = range(fam.table.order)
    cap = 3 if fam.table.order > 32 else 6
    ind = nl.independence_dimension(fam, cap=cap)
    vc = nl.vc_dimension(fam, cap=cap)
    assert ind.dimension == brute_independence_dimension(as_sets(fam), carrier, cap=cap)
    assert vc.dimension == brute_vc_dimension(as_sets(fam), carrier, cap=cap)
    assert nl.replay(fam, ind) and nl.replay(fam, vc)
    assert fam.verify()


def test_wreath22_vc_dimension_value():
    fam = nl.coset_family(fp.build_wreath(2, 2), "wreath-base")
    assert nl.vc_dimension(fam).dimension == 3


def test_monotonicity():
    rng = random.Random(0)
    F = fp.build_wreath(2, 1)
    base = nl.coset_family(F, "wreath-base")
    extra = nl.coset_family(F, "index", max_index=2)
    bigger = base.extended(extra)
    assert len(bigger) >= len(base)
    for mode in (nl.independence_dimension, nl.vc_dimension):
        assert mode(bigger).dimension >= mode(base).dimension
    for _ in range(20):
        sets = [rng.getrandbits(F.order) for _ in range(rng.randint(1, 6))]
        small = nl.family_from_sets(F, sets)
        big = nl.family_from_sets(F, sets + [rng.getrandbits(F.order)])
        assert nl.independence_dimension(big).dimension >= nl.independence_dimension(small).dimension
        assert nl.vc_dimension(big).dimension >= nl.vc_dimension(small).dimension


def test_cap_is_reported():
    fam = nl.coset_family(fp.build_wreath(2, 2), "wreath-base")
    rep = nl.independence_dimension(fam, cap=3)
    assert rep.dimension == 3 and rep.capped
    with pytest.raises(ValueError):
        nl.independence_dimension(fam, cap=21)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_wreath_base_family_is_independent(n):
    fam = nl.coset_family(fp.build_wreath(2, n), "wreath-base")
    rep = nl.independence_dimension(fam, cap=2 ** n)
    assert rep.dimension >= 2 ** n
    assert nl.replay(fam, rep)


def test_index_two_family_is_bounded():
    values = []
    for n in range(1, 6):
        F = fp.build_quotient(UniformGroupModel("abelian", 2, 2, 5), n)
        values.append(nl.independence_dimension(nl.coset_family(F, "index", max_index=2)).dimension)
    assert len(set(values)) == 1
    # the n = 1 value, from the brute-force oracle
    F1 = fp.build_quotient(UniformGroupModel("abelian", 2, 2, 5), 1)
    fam1 = nl.coset_family(F1, "index", max_index=2)
    assert values[0] == brute_independence_dimension(as_sets(fam1), range(F1.order))


def test_shatter_report_json():
    fam = nl.coset_family(klein(), "index", max_index=2)
    doc = json.loads(nl.report_json(nl.vc_dimension(fam)))
    assert doc["mode"] == "vc" and doc["dimension"] == 2


# ---------------------------------------------------------------- TP2


def test_tp2_examples():
    arr = nl.tp2_array(fp.build_wreath(2, 2), 2, 2)
    assert arr.verified and len(arr.paths) == 4
    arr = nl.tp2_array(fp.build_wreath(3, 1), 1, 3)
    assert arr.rows_inconsistent and arr.paths_consistent
    assert nl.tp2_array(fp.build_wreath(2, 1), 1, 1).verified


@pytest.mark.parametrize("p,n,rows,cols", [(2, 1, 1, 2), (2, 1, 2, 1), (2, 2, 2, 2), (2, 2, 4, 1), (2, 2, 1, 4),
                                           (3, 1, 1, 3), (3, 1, 3, 1), (2, 3, 2, 4), (2, 3, 4, 2)])
def test_tp2_on_wreaths(p, n, rows, cols):
    W = fp.build_wreath(p, n)
    arr = nl.tp2_array(W, rows, cols)
    assert arr.verified and nl.replay_tp2(arr)
    assert len(arr.paths) == cols ** rows
    # witnesses are the indicator products of the path's coordinates
    for path in arr.paths:
        f = [0] * p ** n
        for j in path["path"]:
            f[j] = 1
        assert W.elements[path["witness_index"]] == (tuple(f), 0)


def test_tp2_on_direct_product():
    arr = nl.tp2_array(fp.abelian_group([3, 3, 3, 3]), 2, 2)
    assert arr.verified and nl.replay_tp2(arr)


def test_tp2_infeasible():
    with pytest.raises(PartitionInfeasible):
        nl.tp2_array(fp.build_wreath(2, 1), 2, 2)
    with pytest.raises(ValueError):
        nl.tp2_array(fp.build_metacyclic_G2(2, [3], 1), 1, 1)


def test_tp2_replay_catches_tampering():
    arr = nl.tp2_array(fp.build_wreath(2, 2), 2, 2)
    arr.paths[0]["witness_index"] = 0 if arr.paths[0]["witness_index"] else 1
    assert not nl.replay_tp2(arr)


# ---------------------------------------------------------------- Baldwin-Saxl


def test_baldwin_saxl_examples():
    E = fp.abelian_group([3, 3])
    assert nl.baldwin_saxl_width([E.closure([1])]) == 1
    maxes = fp.maximal_subgroups(E)
    assert len(maxes) == 4 and nl.baldwin_saxl_width(maxes) == 2
    for n in (1, 2, 3):
        W = fp.build_wreath(2, n)
        assert nl.baldwin_saxl_width(W.base.kernels) == 2 ** n


def test_baldwin_saxl_limits():
    with pytest.raises(ValueError):
        nl.baldwin_saxl_width([1] * 25)
    with pytest.raises(ValueError):
        nl.baldwin_saxl_width([])


def test_summary_csv():
    text = nl.summary_csv([("W", "base", 1, 2)])
    assert text.splitlines() == ["group,family,n,dimension", "W,base,1,2"]
