"""Marginal and *-cut vertices, and the vertex-removal rule for planar sets."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .lattice import (
    CLOCKWISE_2D,
    ComplementDecomposition,
    Point,
    SiteSet,
    clusters,
    complement_decomposition,
    is_connected,
    neighbors,
    origin,
    outside_neighborhood,
    star_neighbors,
)


def _require_member(A: SiteSet, z) -> Point:
    z = tuple(z)
    if z not in A:
        raise ValueError(f"{z} is not in the set")
    return z


def is_marginal_vertex(A: SiteSet, z, decomp: ComplementDecomposition | None = None,
                       check_connected: bool = True) -> bool:
    """True when the exterior neighbours of z are joined inside its exterior star-neighbourhood.

    Paths are plain lattice paths whose vertices all lie in N_*(z) minus A,
    restricted to the infinite complement cluster.
    """
    z = _require_member(A, z)
    if check_connected and not is_connected(A, "star"):
        raise ValueError("marginality is defined for *-connected sets")
    if decomp is None:
        decomp = complement_decomposition(A)
    ends = outside_neighborhood(A, z, "infinite", "plain", decomp)
    if len(ends) <= 1:
        return True
    region = set(outside_neighborhood(A, z, "infinite", "star", decomp))
    seen = {ends[0]}
    queue = deque([ends[0]])
    while queue:
        p = queue.popleft()
        for q in neighbors(p):
            if q in region and q not in seen:
                seen.add(q)
                queue.append(q)
    return all(e in seen for e in ends)


def is_star_cut_vertex(A: SiteSet, z) -> bool:
    z = _require_member(A, z)
    if len(A) == 1:
        return False
    return len(clusters(A.without(z), "star")) >= 2


def _farthest(A: SiteSet, start: Point) -> Point:
    members = set(A.points)
    dist = {start: 0}
    queue = deque([start])
    best = start
    while queue:
        p = queue.popleft()
        for q in star_neighbors(p):
            if q in members and q not in dist:
                dist[q] = dist[p] + 1
                queue.append(q)
                if (dist[q], q) > (dist[best], best):
                    best = q
    return best


def non_cut_vertex(A: SiteSet, forbidden=None) -> Point:
    """A vertex whose removal keeps A *-connected.

    A vertex at maximal star-graph distance from any fixed vertex is never a
    *-cut vertex, so a double sweep yields two candidates.
    """
    if len(A) == 0:
        raise ValueError("empty set")
    if len(A) == 1:
        return A.points[0]
    forbidden = tuple(forbidden) if forbidden is not None else None
    u = _farthest(A, A.points[0])
    v = _farthest(A, u)
    for cand in (v, u):
        if cand != forbidden and not is_star_cut_vertex(A, cand):
            return cand
    for cand in A.points:
        if cand != forbidden and not is_star_cut_vertex(A, cand):
            return cand
    raise RuntimeError("no admissible non-cut vertex")


@dataclass(frozen=True)
class RemovalDecision:
    z_dagger: Point
    case_label: str
    type_tag: str
    witness: Optional[Point] = None
    cluster_id: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "z_dagger": list(self.z_dagger),
            "case": self.case_label,
            "type": self.type_tag,
            "witness": list(self.witness) if self.witness is not None else None,
            "cluster_id": self.cluster_id,
        }


def _smallest_marginal(parts: list[SiteSet], ambient: SiteSet,
                       decomp: ComplementDecomposition) -> tuple[Point, int] | None:
    best = None
    for k, part in enumerate(parts):
        for p in part.points:
            if is_marginal_vertex(ambient, p, decomp, check_connected=False):
                if best is None or p < best[0]:
                    best = (p, k)
                break  # points are sorted, the first hit is the part's minimum
    return best


def select_removal_vertex(A: SiteSet) -> RemovalDecision:
    """Pick the vertex z_dagger to delete from a planar set containing an exposed origin."""
    if A.d != 2:
        raise ValueError("the removal rule is planar")
    o = origin(2)
    if o not in A:
        raise ValueError("the origin must belong to the set")
    if len(A) < 2:
        raise ValueError("need at least two points")
    decomp = complement_decomposition(A)
    exposed0 = outside_neighborhood(A, o, "infinite", "plain", decomp)
    if not exposed0:
        raise ValueError("the origin is enclosed")

    for p in A.points:
        if p != o and not outside_neighborhood(A, p, "infinite", "plain", decomp):
            return RemovalDecision(p, "dead", "trivial")

    star_parts = clusters(A, "star")
    if len(star_parts) == 1:
        z2 = min(exposed0)
        k = CLOCKWISE_2D.index(z2)
        prev = z2
        z_diamond = None
        for step in range(1, 8):
            cand = CLOCKWISE_2D[(k + step) % 8]
            if cand in A:
                z_diamond = cand
                break
            prev = cand
        assert z_diamond is not None
        if not is_star_cut_vertex(A, z_diamond):
            return RemovalDecision(z_diamond, "1a", "i", witness=prev)
        rest = [c for c in clusters(A.without(z_diamond), "star") if o not in c]
        found = _smallest_marginal(rest, A, decomp)
        if found is None:
            raise RuntimeError("no marginal vertex outside the origin cluster")
        return RemovalDecision(found[0], "1b", "ii", cluster_id=found[1])

    others = [c for c in star_parts if o not in c]
    for k, part in enumerate(others):
        if len(part) >= 2:
            pdec = complement_decomposition(part)
            found = _smallest_marginal([part], part, pdec)
            if found is None:
                raise RuntimeError("cluster without a marginal vertex")
            return RemovalDecision(found[0], "2", "ii", cluster_id=k)
    z = min(p for c in others for p in c.points)
    return RemovalDecision(z, "3", "iii")
