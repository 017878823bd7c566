import pytest

from harmlat.geometry import (
    is_marginal_vertex,
    is_star_cut_vertex,
    non_cut_vertex,
    select_removal_vertex,
)
from harmlat.lattice import SiteSet


def test_line_endpoints_are_marginal_not_cut():
    A = SiteSet.from_points([(0, 0), (1, 0), (2, 0)])
    assert is_star_cut_vertex(A, (1, 0))
    assert not is_star_cut_vertex(A, (0, 0))
    assert is_marginal_vertex(A, (0, 0))
    # the middle of a line has exterior neighbours above and below that can
    # only meet by passing around an end, outside the star neighbourhood
    assert not is_marginal_vertex(A, (1, 0))


def test_non_cut_vertex_respects_forbidden():
    A = SiteSet.from_points([(0, 0), (1, 0), (2, 0), (3, 0)])
    v = non_cut_vertex(A)
    assert v in {(0, 0), (3, 0)}
    assert non_cut_vertex(A, forbidden=v) != v


def test_two_point_decision():
    dec = select_removal_vertex(SiteSet.from_points([(0, 0), (1, 0)]))
    assert dec.z_dagger == (1, 0)
    assert dec.type_tag == "i"
    assert dec.to_json()["case"] == "1a"


def test_far_point_is_type_iii():
    dec = select_removal_vertex(SiteSet.from_points([(0, 0), (5, 5)]))
    assert (dec.case_label, dec.type_tag, dec.z_dagger) == ("3", "iii", (5, 5))


def test_dead_vertex_removed_first():
    ring = [(x, y) for x in range(2, 5) for y in range(-1, 2) if (x, y) != (3, 0)]
    A = SiteSet.from_points([(0, 0), (3, 0)] + ring)
    dec = select_removal_vertex(A)
    assert dec.case_label == "dead" and dec.z_dagger == (3, 0)


def test_errors():
    with pytest.raises(ValueError):
        select_removal_vertex(SiteSet.from_points([(1, 0), (2, 0)]))
    with pytest.raises(ValueError):
        select_removal_vertex(SiteSet.from_points([(0, 0)]))
    with pytest.raises(ValueError):
        select_removal_vertex(SiteSet.from_points([(0, 0, 0), (1, 0, 0)]))
