"""Builders for the example sets and gallery graphs, plus seeded random ensembles."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .chain import AbsorbingChain
from .lattice import (
    Point,
    SiteSet,
    clusters,
    complement_decomposition,
    linf,
    neighbors,
    origin,
    outside_neighborhood,
    star_neighbors,
)


# tube -------------------------------------------------------------------------

@dataclass(frozen=True)
class TubeSet:
    points: SiteSet
    y: Point
    z: Point


def tube_set(m: int) -> TubeSet:
    """Two horizontal walls of length m with an open left end.

    The marked point y = (0, 0) sits one step inside the right mouth, which is
    closed by z = (1, 0). Walls occupy rows +-1 over columns -(m-2)..1.
    """
    if m < 2:
        raise ValueError("tube needs m >= 2")
    walls = [(x, s) for x in range(-(m - 2), 2) for s in (1, -1)]
    pts = SiteSet.from_points(walls + [(0, 0), (1, 0)], 2)
    return TubeSet(pts, (0, 0), (1, 0))


# spiral -----------------------------------------------------------------------

# the first points of the figure, in the order the spiral arm is laid down
SPIRAL_FIGURE_PREFIX: tuple[Point, ...] = (
    (0, 0), (0, 1), (0, -1), (-1, 1), (-2, 0), (1, 0), (-1, -2), (-2, -3),
    (-3, -2), (-4, -1), (-5, 0), (-4, 1), (-3, 2), (-2, 3), (-1, 4), (0, 4),
    (1, 3), (2, 2), (3, 1), (4, 0), (3, -1), (2, -2), (1, -3), (0, -4),
    (-1, -5), (-2, -6), (-3, -5), (-4, -4), (-5, -3), (-6, -2), (-7, -1), (-8, 0),
    (-7, 1), (-6, 2), (-5, 3), (-4, 4), (-3, 5), (-2, 6), (-1, 7), (0, 7),
    (1, 6), (2, 5), (3, 4), (4, 3), (5, 2), (6, 1), (7, 0), (6, -1),
    (5, -2), (4, -3), (3, -4), (2, -5), (1, -6), (0, -7), (-1, -8), (-2, -9),
    (-3, -8), (-4, -7), (-5, -6), (-6, -5), (-7, -4), (-8, -3), (-9, -2), (-10, -1),
    (-11, 0), (-10, 1), (-9, 2), (-8, 3), (-7, 4), (-6, 5), (-5, 6), (-4, 7),
    (-3, 8), (-2, 9), (-1, 10), (0, 10),
)

_UL, _UR, _R, _DR, _DL = (-1, 1), (1, 1), (1, 0), (1, -1), (-1, -1)


def spiral_sequence(n: int) -> list[Point]:
    """First n points of the diagonal square spiral around the origin's pocket."""
    seq = list(SPIRAL_FIGURE_PREFIX[:7])
    if n <= len(seq):
        return seq[:n]
    p = seq[-1]

    def run(step, count):
        nonlocal p
        for _ in range(count):
            if len(seq) >= n:
                return
            p = (p[0] + step[0], p[1] + step[1])
            seq.append(p)

    run(_DL, 1)
    k = 1
    while len(seq) < n:
        run(_UL, 3 * k)
        run(_UR, 3 * k + 1)
        run(_R, 1)
        run(_DR, 3 * k + 1)
        run(_DL, 3 * (k + 1))
        k += 1
    return seq[:n]


def spiral_set(n: int) -> SiteSet:
    if n < 2:
        raise ValueError("spiral needs n >= 2")
    return SiteSet.from_points(spiral_sequence(n), 2)


# tetration --------------------------------------------------------------------

def tetration(k: int) -> int:
    v = 1
    for _ in range(k):
        v = 2 ** v
    return v


def tetration_set(n: int, cap_k: int = 5) -> SiteSet:
    """{(0,0)} together with (^k 2, 0) for 0 <= k <= n - 2."""
    if n < 2:
        raise ValueError("need n >= 2")
    if cap_k > 5 or n - 2 > cap_k:
        raise OverflowError("tetration beyond 2^16 requested")
    return SiteSet.from_points([(0, 0)] + [(tetration(k), 0) for k in range(n - 1)], 2)


# Klein bottle -----------------------------------------------------------------

@dataclass(frozen=True)
class KleinBottleSpec:
    n: int
    d: int = 3

    def __post_init__(self):
        if self.n % 2 or self.n < 4:
            raise ValueError("n must be even and at least 4")
        if self.d < 3:
            raise ValueError("the construction needs d >= 3")

    def _pt(self, a, b) -> Point:
        return (a, b) + (0,) * (self.d - 2)

    @property
    def x1(self) -> Point:
        return self._pt(0, self.n)

    @property
    def x2(self) -> Point:
        return self._pt(self.n, 0)

    @property
    def x3(self) -> Point:
        return self._pt(self.n // 2, -self.n)

    def outer_waypoints(self) -> list[Point]:
        n = self.n
        return [self.x1, self._pt(0, 2 * n), self._pt(2 * n, 2 * n), self._pt(2 * n, 0), self.x2]

    def inner_waypoints(self) -> list[Point]:
        return [self.x2, self._pt(self.n // 2, 0), self.x3]


def broken_line(waypoints) -> list[Point]:
    """Lattice path through axis-aligned waypoints."""
    pts = [tuple(waypoints[0])]
    for a, b in zip(waypoints, waypoints[1:]):
        diff = [bi - ai for ai, bi in zip(a, b)]
        axes = [i for i, v in enumerate(diff) if v]
        if len(axes) > 1:
            raise ValueError("waypoints must differ in one coordinate")
        if not axes:
            continue
        i = axes[0]
        s = 1 if diff[i] > 0 else -1
        cur = list(a)
        for _ in range(abs(diff[i])):
            cur[i] += s
            pts.append(tuple(cur))
    return pts


def _outer_boundary(pts) -> set:
    rng = set(pts)
    return {q for p in rng for q in neighbors(p) if q not in rng}


@dataclass(frozen=True)
class KleinParts:
    shell: frozenset
    punctured: frozenset
    outer_tube: frozenset
    inner_tube: frozenset
    outer_path: tuple
    inner_path: tuple


def klein_parts(spec: KleinBottleSpec) -> KleinParts:
    n, d = spec.n, spec.d
    shell = set()
    for p in itertools.product(range(-n, n + 1), repeat=d):
        if sum(abs(c) == n for c in p) == 1:
            shell.add(p)
    holes = set()
    for x in (spec.x1, spec.x2, spec.x3):
        holes.add(x)
        holes.update(neighbors(x))
    punctured = shell - holes
    eta_o = broken_line(spec.outer_waypoints())
    eta_i = broken_line(spec.inner_waypoints())
    t_out = {p for p in _outer_boundary(eta_o) if linf(p) > n}
    t_in = {p for p in _outer_boundary(eta_i) if linf(p) <= n - 1}
    return KleinParts(frozenset(shell), frozenset(punctured), frozenset(t_out),
                      frozenset(t_in), tuple(eta_o), tuple(eta_i))


def klein_bottle(spec: KleinBottleSpec, with_origin: bool = True) -> SiteSet:
    """Punctured shell of Lambda(n) plus the outer and inner tubes (and the origin)."""
    parts = klein_parts(spec)
    pts = set(parts.punctured) | parts.outer_tube | parts.inner_tube
    if with_origin:
        pts.add(origin(spec.d))
    return SiteSet.from_points(pts, spec.d)


# gallery chains ---------------------------------------------------------------

@dataclass
class GalleryChain:
    """A finite graph with target states and an optional collapsed far vertex."""

    name: str
    states: list
    edges: list
    targets: list
    zeta: object = None
    params: dict = field(default_factory=dict)

    def chain(self, extra_absorbing=()) -> AbsorbingChain:
        absorbing = list(self.targets) + ([self.zeta] if self.zeta is not None else [])
        absorbing += [s for s in extra_absorbing if s not in absorbing]
        return AbsorbingChain.from_graph(self.states, self.edges, absorbing)

    def degree(self, s) -> float:
        return sum((e[2] if len(e) > 2 else 1) for e in self.edges if s in (e[0], e[1]) and e[0] != e[1])

    def to_json(self) -> dict:
        lab = lambda s: list(s) if isinstance(s, tuple) else s
        absorbing = list(self.targets) + ([self.zeta] if self.zeta is not None else [])
        return {
            "name": self.name,
            "states": [lab(s) for s in self.states],
            "edges": [[lab(e[0]), lab(e[1])] + list(e[2:]) for e in self.edges],
            "absorbing": [lab(s) for s in absorbing],
            "params": self.params,
        }


ZETA = "zeta"


def hairs_chain(k: int, r: int) -> GalleryChain:
    """Z with a pendant edge at every vertex, cut at graph distance r from (0,0).

    Spine vertices are (i, 0), hair tips (i, 1). Everything beyond distance r
    is merged into one vertex ``zeta``; edges inside it are dropped. Targets
    are (0,0), (-1,0) and (k,1).
    """
    if k < 1:
        raise ValueError("need k >= 1")
    if r <= k + 2:
        raise ValueError("need r > k + 2")

    def inside(v):
        return abs(v[0]) + v[1] <= r

    def lab(v):
        return v if inside(v) else ZETA

    states = [(i, 0) for i in range(-r, r + 1)] + [(i, 1) for i in range(-(r - 1), r)] + [ZETA]
    mult: dict = {}
    for i in range(-r - 1, r + 1):
        for a, b in (((i, 0), (i + 1, 0)), ((i, 0), (i, 1))):
            u, v = lab(a), lab(b)
            if u == v:
                continue
            key = (u, v) if str(u) <= str(v) else (v, u)
            mult[key] = mult.get(key, 0) + 1
    edges = [(u, v, w) for (u, v), w in mult.items()]
    targets = [(0, 0), (-1, 0), (k, 1)]
    return GalleryChain("hairs", states, edges, targets, ZETA, {"k": k, "r": r})


def tree_tunnel_chain(n: int) -> GalleryChain:
    """The tunnel of length n in the 3-regular tree.

    States 1..n along the tunnel; state 1 is the open end, state n the closed
    end, and every interior state has a third neighbour ("side", i) belonging
    to the set, so q_i = (q_{i-1} + q_{i+1}) / 3 for the probability of reaching
    the open end first.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    states = list(range(1, n + 1)) + [("side", i) for i in range(2, n)]
    edges = [(i, i + 1) for i in range(1, n)] + [(i, ("side", i)) for i in range(2, n)]
    targets = [1, n] + [("side", i) for i in range(2, n)]
    return GalleryChain("tree_tunnel", states, edges, targets, None, {"n": n})


# random ensembles -------------------------------------------------------------

@dataclass(frozen=True)
class RandomSetParams:
    size: int
    window: int = 3
    connectivity: str = "any"
    require_origin_exposed: bool = False
    d: int = 2
    include_origin: bool = True


def random_site_set(params: RandomSetParams | dict, seed: int, max_tries: int = 1000) -> SiteSet:
    """Seeded random set inside Lambda(window) meeting the requested constraints."""
    if isinstance(params, dict):
        params = RandomSetParams(**params)
    p = params
    d, w = p.d, p.window
    cells = (2 * w + 1) ** d
    if p.size < 1 or p.size > cells:
        raise ValueError("size does not fit in the window")
    rng = np.random.default_rng(seed)
    o = origin(d)
    for _ in range(max_tries):
        if p.connectivity == "star_connected":
            pts = _grow_star(rng, p.size, w, d, o if p.include_origin else None)
        elif p.connectivity == "any":
            pts = set()
            if p.include_origin:
                pts.add(o)
            while len(pts) < p.size:
                pts.add(tuple(int(c) for c in rng.integers(-w, w + 1, d)))
        else:
            raise ValueError(f"unknown connectivity {p.connectivity!r}")
        if pts is None:
            continue
        A = SiteSet.from_points(pts, d)
        if p.require_origin_exposed and len(A) > 1:
            if o not in A or not outside_neighborhood(A, o, "infinite", "plain",
                                                      complement_decomposition(A)):
                continue
        return A
    raise RuntimeError("constraints not met after bounded retries")


def _grow_star(rng, size, w, d, seed_point):
    start = seed_point if seed_point is not None else tuple(int(c) for c in rng.integers(-w, w + 1, d))
    pts = {start}
    frontier = set()

    def add_frontier(p):
        for q in star_neighbors(p):
            if linf(q) <= w and q not in pts:
                frontier.add(q)

    add_frontier(start)
    while len(pts) < size:
        if not frontier:
            return None
        cand = sorted(frontier)
        q = cand[int(rng.integers(len(cand)))]
        frontier.discard(q)
        pts.add(q)
        add_frontier(q)
    return pts
