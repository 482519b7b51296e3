import itertools

from hypothesis import given, settings, strategies as st

from propkit.linalg import LinearSolver, rank, reduce_mod_span, rref


def span(vectors, p):
    dim = len(vectors[0])
    out = set()
    for cs in itertools.product(range(p), repeat=len(vectors)):
        out.add(tuple(sum(c * v[i] for c, v in zip(cs, vectors)) % p for i in range(dim)))
    return out


def test_rref_basic():
    rows, piv = rref([[2, 4, 1], [1, 2, 0]], 3)
    assert piv == [0, 2]
    assert rows == [[1, 2, 0], [0, 0, 1]]
    assert rref([], 5) == ([], [])
    assert rank([[0, 0], [0, 0]], 7) == 0


mats = st.tuples(st.sampled_from([2, 3, 5]), st.integers(1, 3), st.integers(1, 3)).flatmap(
    lambda t: st.tuples(st.just(t[0]), st.lists(st.lists(st.integers(0, t[0] - 1), min_size=t[2], max_size=t[2]),
                                                min_size=t[1], max_size=t[1])))


@settings(max_examples=150, deadline=None)
@given(mats)
def test_rank_and_span_agree_with_enumeration(pm):
    p, rows = pm
    S = span(rows, p)
    assert len(S) == p ** rank(rows, p)
    basis, piv = rref(rows, p)
    assert span(basis, p) == S if basis else S == {(0,) * len(rows[0])}
    # canonical representatives are constant on cosets of the span
    for v in itertools.product(range(p), repeat=len(rows[0])):
        r = reduce_mod_span(v, basis, piv, p)
        assert all(r[c] == 0 for c in piv)
        diff = tuple((a - b) % p for a, b in zip(v, r))
        assert diff in S


@settings(max_examples=150, deadline=None)
@given(mats)
def test_solver_finds_solutions_exactly_in_the_span(pm):
    p, cols = pm
    dim = len(cols[0])
    solver = LinearSolver(cols, p, dim)
    S = span(cols, p)
    assert solver.rank == rank(cols, p)
    for t in itertools.product(range(p), repeat=dim):
        c = solver.solve(t)
        if t in S:
            assert c is not None
            got = tuple(sum(ci * col[i] for ci, col in zip(c, cols)) % p for i in range(dim))
            assert got == t
        else:
            assert c is None
