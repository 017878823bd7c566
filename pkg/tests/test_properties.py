import itertools

import numpy as np
from hypothesis import assume, given, seed, settings
from hypothesis import strategies as st

from harmlat.geometry import is_marginal_vertex, is_star_cut_vertex
from harmlat.lattice import SiteSet, boundary, complement_decomposition, is_connected
from harmlat.solver import (
    dense_harmonic_measure,
    escape_capacity,
    gamma_path,
    green_killed_dense,
    tunnel_recurrence,
)
from test_solver import path_chain_gamma

ATOL = 1e-10

pts2 = st.tuples(st.integers(-3, 3), st.integers(-3, 3))
pts3 = st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2))
sets2 = st.sets(pts2, min_size=1, max_size=9).map(lambda s: SiteSet.from_points(s, 2))
sets3 = st.sets(pts3, min_size=1, max_size=7).map(lambda s: SiteSet.from_points(s, 3))
FAST = settings(max_examples=40, deadline=None)


@seed(1)
@FAST
@given(sets2)
def test_measure_is_probability(A):
    w = dense_harmonic_measure(A).weights
    assert np.all(w >= -ATOL)
    assert abs(w.sum() - 1) < ATOL


@seed(2)
@FAST
@given(sets2, st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 3))
def test_translation_and_rotation_invariance(A, dx, dy, k):
    def move(p):
        x, y = p
        for _ in range(k):
            x, y = -y, x
        return (x + dx, y + dy)
    base = dense_harmonic_measure(A)
    moved = dense_harmonic_measure(SiteSet.from_points([move(p) for p in A.points], 2))
    for p in A.points:
        assert abs(base[p] - moved[move(p)]) < ATOL


@seed(3)
@FAST
@given(sets2, st.data())
def test_removal_never_lowers_measure(A, data):
    assume(len(A) >= 2)
    z = data.draw(st.sampled_from(A.points))
    before = dense_harmonic_measure(A)
    after = dense_harmonic_measure(A.without(z))
    for y in A.points:
        if y != z:
            assert after[y] >= before[y] - 1e-9


@seed(4)
@FAST
@given(sets3, sets3)
def test_capacity_monotone_submodular(A, B):
    cap = lambda S: escape_capacity(S).cap if len(S) else 0.0
    U = A.union(B.points)
    I = SiteSet.from_points([p for p in A.points if p in B], 3)
    assert cap(U) >= max(cap(A), cap(B)) - 1e-9
    assert cap(A) + cap(B) >= cap(U) + cap(I) - 1e-9


@seed(5)
@FAST
@given(sets2, pts2, pts2)
def test_green_symmetry(A, x, y):
    assume(x not in A and y not in A)
    assert abs(green_killed_dense(A, x, y) - green_killed_dense(A, y, x)) < 1e-9


@seed(6)
@settings(max_examples=60, deadline=None)
@given(st.sets(pts2, min_size=1, max_size=14).map(lambda s: SiteSet.from_points(s, 2)))
def test_non_cut_vertices_are_marginal(A):
    assume(is_connected(A, "star"))
    dec = complement_decomposition(A)
    for z in A.points:
        assert is_star_cut_vertex(A, z) or is_marginal_vertex(A, z, dec, check_connected=False)


@seed(7)
@settings(max_examples=60, deadline=None)
@given(sets2)
def test_exterior_boundary_star_connected(A):
    assume(is_connected(A, "star"))
    assert is_connected(boundary(A, "outer_ext"), "star")


@seed(8)
@FAST
@given(sets2)
def test_siteset_json_roundtrip(A):
    assert SiteSet.from_json(A.dumps()) == A


@seed(9)
@FAST
@given(st.integers(1, 20), st.sampled_from([2, 3]))
def test_gamma_matches_chain(L, d):
    assert abs(gamma_path(L, d) - path_chain_gamma(L, d)) < 1e-12


@seed(10)
@FAST
@given(st.floats(2.1, 10.0), st.integers(3, 40))
def test_tunnel_solution_satisfies_recurrence(b, n):
    q = np.concatenate([tunnel_recurrence(b, n).values, [0.0]])
    assert q[0] == 1.0
    for i in range(1, n - 1):
        assert abs(b * q[i] - q[i - 1] - q[i + 1]) < 1e-12


def _bfs_infinite(A):
    """Complement points reachable from outside the bounding box, by plain BFS."""
    from collections import deque
    lim = max(max(map(abs, p)) for p in A.points) + 1
    start = (lim,) * A.d
    seen, todo = {start}, deque([start])
    while todo:
        p = todo.popleft()
        for i in range(A.d):
            for s in (1, -1):
                q = p[:i] + (p[i] + s,) + p[i + 1:]
                if max(map(abs, q)) <= lim and q not in A and q not in seen:
                    seen.add(q)
                    todo.append(q)
    return seen


@seed(11)
@settings(max_examples=60, deadline=None)
@given(st.sets(pts2, min_size=1, max_size=20).map(lambda s: SiteSet.from_points(s, 2)))
def test_infinite_component_matches_bfs(A):
    dec = complement_decomposition(A)
    reach = _bfs_infinite(A)
    lim = max(max(map(abs, p)) for p in A.points) + 1
    for p in itertools.product(range(-lim, lim + 1), repeat=2):
        if p not in A:
            assert dec.is_infinite(p) == (p in reach)
