import math

import numpy as np
import pytest

from harmlat.constructions import hairs_chain, tree_tunnel_chain
from harmlat.lattice import SiteSet, straight_path
from harmlat.chain import AbsorbingChain
from harmlat.solver import (
    ToleranceError,
    dense_harmonic_measure,
    escape_bracket,
    escape_capacity,
    escape_removal_ratios,
    gamma_path,
    graph_wired_measure,
    green_identities,
    green_killed,
    green_killed_dense,
    harmonic_measure_infinity,
    last_exit_check,
    min_removal_price,
    removal_price,
    return_bound,
    tree_tunnel_ratio,
    truncated_green,
    tunnel_recurrence,
    wired_extrapolated,
    wired_harmonic_measure,
)
from test_potential import watson_green_origin

CROSS = SiteSet.from_points([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])


def path_chain_gamma(L, d):
    """Traversal probability from a chain built on the path and its exterior neighbours."""
    verts = [(i,) + (0,) * (d - 1) for i in range(L + 1)]
    vs = set(verts)
    states, edges, absorbing = list(verts), [], []
    for v in verts:
        for k in range(d):
            for s in (1, -1):
                q = list(v)
                q[k] += s
                q = tuple(q)
                if q not in vs:
                    states.append((v, k, s))
                    absorbing.append((v, k, s))
                    edges.append((v, (v, k, s)))
                elif q > v:
                    edges.append((v, q))
    ch = AbsorbingChain.from_graph(states, edges, absorbing + [verts[-1]])
    h, _ = ch.absorption_probabilities([verts[-1]])
    return h[ch.t_index(verts[0]), 0]


@pytest.mark.parametrize("L, d, exact", [(0, 2, 1.0), (1, 2, 0.25), (2, 2, 1 / 15), (1, 3, 1 / 6)])
def test_gamma_small_values(L, d, exact):
    assert gamma_path(L, d) == pytest.approx(exact, rel=1e-14)


@pytest.mark.parametrize("L", [1, 3, 7])
@pytest.mark.parametrize("d", [2, 3])
def test_gamma_matches_explicit_chain(L, d):
    assert abs(gamma_path(L, d) - path_chain_gamma(L, d)) < 1e-14


def test_tunnel_roots():
    sol = tunnel_recurrence(3.0, 5)
    assert sorted(sol.roots) == pytest.approx(sorted([(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2]))


def test_two_point_planar_routes():
    A = SiteSet.from_points([(0, 0), (1, 0)])
    d = dense_harmonic_measure(A)
    assert np.allclose(d.weights, 0.5, atol=1e-13)
    # the L1 ball is symmetric about the origin, so use a pair mirrored through it
    B = SiteSet.from_points([(-1, 0), (1, 0)])
    w = wired_harmonic_measure(B, 40)
    assert np.allclose(w.weights, 0.5, atol=1e-13)


def test_cross_quarter_each():
    mv = dense_harmonic_measure(CROSS)
    assert mv[(0, 0)] == pytest.approx(0.0, abs=1e-13)
    arms = [p for p in CROSS.points if p != (0, 0)]
    assert all(abs(mv[p] - 0.25) < 1e-13 for p in arms)


def test_wired_agrees_with_dense_on_l_shape():
    A = SiteSet.from_points([(0, 0), (1, 0), (1, 1), (-1, 2)])
    w = wired_extrapolated(A, tol=1e-7)
    d = dense_harmonic_measure(A)
    assert np.abs(w.weights - d.weights).max() < max(1e-7, 3 * w.error_estimate)


def test_single_point_capacity_is_watson():
    ec = escape_capacity(SiteSet.from_points([(0, 0, 0)]))
    assert ec.cap == pytest.approx(1 / watson_green_origin(), rel=1e-11)


def test_escape_bracket_contains_truth():
    A = SiteSet.from_points([(0, 0, 0)])
    br = escape_bracket(A, 10)
    truth = 1 / watson_green_origin()
    o = (0, 0, 0)
    assert br["lower"][o] <= truth <= br["upper"][o]
    assert 0 < return_bound(A, 10) < 1


def test_front_door_methods():
    A2 = SiteSet.from_points([(0, 0), (2, 1)])
    assert harmonic_measure_infinity(A2, "dense").method == "dense_kernel"
    A3 = SiteSet.from_points([(0, 0, 0), (1, 0, 0)])
    mv = harmonic_measure_infinity(A3)
    assert np.allclose(mv.weights, 0.5, atol=1e-12)
    with pytest.raises(ValueError):
        harmonic_measure_infinity(A3, "bogus")


def test_wired_budget_raises_tolerance_error():
    A = SiteSet.from_points([(0, 0), (3, 0)])
    with pytest.raises(ToleranceError) as exc:
        wired_extrapolated(A, tol=1e-15, max_doublings=1)
    assert exc.value.best is not None


def test_green_routes_agree():
    A = SiteSet.from_points([(0, 0), (1, 0)])
    g_dense = green_killed_dense(A, (0, 2), (1, 1))
    g_trunc, err = green_killed(A, (0, 2), (1, 1), method="truncated", tol=1e-2)
    assert abs(g_dense - g_trunc) < max(5e-3, 3 * err)
    A3 = SiteSet.from_points([(0, 0, 0)])
    g3 = green_killed_dense(A3, (1, 0, 0), (1, 0, 0))
    t3, err3 = green_killed(A3, (1, 0, 0), (1, 0, 0), method="truncated", tol=0.1)
    # truncation only loses visits, and the reported tail bound covers the gap
    assert t3 <= g3 <= t3 + err3
    assert truncated_green(A3, (1, 0, 0), (1, 0, 0), 8) < t3


def test_green_identities_truncated():
    A = SiteSet.from_points([(0, 0), (1, 0), (0, 2)])
    res = green_identities(A, A.without((1, 0)), (2, 1), (-1, 1), 4)
    assert max(res.values()) < 1e-10
    le = last_exit_check(A.without((1, 0)), A, (0, 0), (1, 0), 4)
    assert le.diff < 1e-10


def test_removal_price_tube_like():
    A = SiteSet.from_points([(0, 0), (1, 0), (-1, 0)])
    rp = removal_price(A, (0, 0), (1, 0))
    assert rp.rho > 1
    # removing the end point reveals more of the middle
    assert rp.after == pytest.approx(dense_harmonic_measure(A.without((1, 0)))[(0, 0)])
    mp = min_removal_price(A, (0, 0))
    assert mp.z_star in {(1, 0), (-1, 0)}
    with pytest.raises(ValueError):
        removal_price(A, (0, 0), (0, 0))


def test_escape_ratio_formula_matches_recomputation():
    A = SiteSet.from_points([(0, 0, 0), (1, 0, 0), (0, 1, 0), (2, 1, 0), (0, 0, 2), (1, 1, 1)])
    er = escape_removal_ratios(A)
    base = escape_capacity(A).es[(0, 0, 0)]
    assert er.base == pytest.approx(base, rel=1e-10)
    for z, r in er.ratios.items():
        direct = escape_capacity(A.without(z)).es[(0, 0, 0)] / base
        assert r == pytest.approx(direct, rel=1e-9)


def test_tree_tunnel():
    assert abs(tree_tunnel_ratio(40) - (3 - math.sqrt(5)) / 2) < 1e-12
    with pytest.raises(ValueError):
        graph_wired_measure(tree_tunnel_chain(5))
    mv = graph_wired_measure(hairs_chain(2, 30))
    assert mv.weights.sum() == pytest.approx(1.0)


def test_wired_enclosed_point_gets_zero():
    mv = wired_harmonic_measure(CROSS, 30)
    assert mv[(0, 0)] == 0.0
    assert abs(mv.weights.sum() - 1) < 1e-14
