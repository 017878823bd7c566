import math

import numpy as np
import pytest

from harmlat.potential import (
    KAPPA,
    PotentialTable,
    _kernel_2d_far,
    _kernel_2d_quad,
    free_green,
    potential_kernel_2d,
    potential_table,
)


def watson_green_origin():
    # closed form for the return generating value of the cubic lattice
    g = math.gamma
    return math.sqrt(6) / (32 * math.pi ** 3) * g(1 / 24) * g(5 / 24) * g(7 / 24) * g(11 / 24)


@pytest.mark.parametrize("x, exact", [
    ((0, 0), 0.0),
    ((1, 0), 1.0),
    ((1, 1), 4 / math.pi),
    ((2, 0), 4 - 8 / math.pi),
    ((2, 1), 8 / math.pi - 1),
    ((2, 2), 16 / (3 * math.pi)),
])
def test_planar_kernel_closed_forms(x, exact):
    assert potential_kernel_2d(x) == pytest.approx(exact, abs=1e-13)


def test_planar_far_field_joins_quadrature():
    for key in [(0, 200), (120, 160), (141, 142)]:
        assert abs(_kernel_2d_quad(key) - _kernel_2d_far(key)) < 1e-10


def test_green_origin_matches_watson():
    assert free_green((0, 0, 0)) == pytest.approx(watson_green_origin(), rel=1e-12)


def test_green_mean_value_property():
    t = PotentialTable("free_green_d3plus", 3)
    for x in [(0, 0, 0), (1, 0, 0), (2, 1, 0), (3, 2, 1)]:
        assert abs(t.laplacian_residual(x)) < 1e-11


def test_table_build_checks_identities():
    t = potential_table("potential_kernel_d2", 6, tol=1e-11)
    assert t.value((0, 0)) == 0.0
    assert t.value((3, -4)) == t.value((4, 3))
    M = t.matrix([(0, 0), (1, 0)], [(0, 0), (1, 0)])
    assert np.allclose(M, [[0, 1], [1, 0]])


def test_table_rejects_bad_kind():
    with pytest.raises(ValueError):
        PotentialTable("nope", 2)
    with pytest.raises(ValueError):
        potential_table("potential_kernel_d2", 100)
    with pytest.raises(ValueError):
        free_green((1, 0))


def test_far_constant():
    assert KAPPA == pytest.approx((2 * np.euler_gamma + math.log(8)) / math.pi)
