"""Points, finite site sets, adjacency, paths and boundary operators on Z^d."""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

Point = tuple[int, ...]

SUPPORTED_DIMS = (2, 3, 4)

# clockwise with +y up, starting from (0, 1)
CLOCKWISE_2D: tuple[Point, ...] = (
    (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1),
)


def origin(d: int) -> Point:
    return (0,) * d


def _check_dim(d: int) -> None:
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"unsupported dimension {d}")


def neighbors(p: Sequence[int]) -> list[Point]:
    """The 2d lattice neighbours of p, ordered +e_i, -e_i for ascending i."""
    p = tuple(int(c) for c in p)
    out = []
    for i in range(len(p)):
        for s in (1, -1):
            q = list(p)
            q[i] += s
            out.append(tuple(q))
    return out


_STAR_OFFSETS: dict[int, list[Point]] = {}


def _star_offsets(d: int) -> list[Point]:
    if d not in _STAR_OFFSETS:
        _STAR_OFFSETS[d] = [v for v in itertools.product((-1, 0, 1), repeat=d) if any(v)]
    return _STAR_OFFSETS[d]


def star_neighbors(p: Sequence[int]) -> list[Point]:
    """Points at L-infinity distance one. In d=2 the order is clockwise from p+(0,1)."""
    p = tuple(int(c) for c in p)
    offs = CLOCKWISE_2D if len(p) == 2 else _star_offsets(len(p))
    return [tuple(a + b for a, b in zip(p, v)) for v in offs]


def l1(p: Sequence[int]) -> int:
    return int(sum(abs(c) for c in p))


def linf(p: Sequence[int]) -> int:
    return int(max(abs(c) for c in p)) if len(p) else 0


def _adjacent(p: Point, q: Point, adjacency: str) -> bool:
    diff = [abs(a - b) for a, b in zip(p, q)]
    if adjacency == "plain":
        return sum(diff) == 1
    return max(diff) == 1


def _nbrs(p: Point, adjacency: str) -> list[Point]:
    if adjacency == "plain":
        return neighbors(p)
    if adjacency == "star":
        return star_neighbors(p)
    raise ValueError(f"unknown adjacency {adjacency!r}")


@dataclass(frozen=True)
class SiteSet:
    """Finite set of lattice points, stored in lexicographic order."""

    d: int
    points: tuple[Point, ...]
    index: dict = field(compare=False, repr=False, hash=False)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[int]], d: int | None = None,
                    allow_duplicates: bool = True) -> "SiteSet":
        pts = [tuple(int(c) for c in p) for p in points]
        if d is None:
            if not pts:
                raise ValueError("dimension required for an empty set")
            d = len(pts[0])
        if any(len(p) != d for p in pts):
            raise ValueError("mixed dimensions")
        uniq = sorted(set(pts))
        if not allow_duplicates and len(uniq) != len(pts):
            raise ValueError("duplicate points")
        return cls(d, tuple(uniq), {p: i for i, p in enumerate(uniq)})

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return tuple(p) in self.index

    def __hash__(self) -> int:
        return hash((self.d, self.points))

    @property
    def bbox(self) -> tuple[Point, Point]:
        arr = self.array()
        return tuple(int(v) for v in arr.min(0)), tuple(int(v) for v in arr.max(0))

    def radius(self) -> int:
        """Largest L-infinity norm over the set (0 for the empty set)."""
        return max((linf(p) for p in self.points), default=0)

    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64).reshape(len(self.points), self.d)

    def without(self, *zs: Sequence[int]) -> "SiteSet":
        drop = {tuple(z) for z in zs}
        return SiteSet.from_points([p for p in self.points if p not in drop], self.d)

    def union(self, other: Iterable[Sequence[int]]) -> "SiteSet":
        return SiteSet.from_points(list(self.points) + [tuple(p) for p in other], self.d)

    def to_json(self) -> dict:
        return {"d": self.d, "points": [list(p) for p in self.points]}

    @classmethod
    def from_json(cls, obj) -> "SiteSet":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        d = int(obj["d"])
        return cls.from_points(obj["points"], d, allow_duplicates=False)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def clusters(S: SiteSet | Iterable[Point], adjacency: str = "plain") -> list[SiteSet]:
    """Connected components under plain or star adjacency, ordered by smallest member."""
    if not isinstance(S, SiteSet):
        pts = [tuple(p) for p in S]
        if not pts:
            return []
        S = SiteSet.from_points(pts)
    members = set(S.points)
    seen = set()
    parts = []
    for p in S.points:
        if p in seen:
            continue
        comp = [p]
        seen.add(p)
        queue = deque([p])
        while queue:
            q = queue.popleft()
            for r in _nbrs(q, adjacency):
                if r in members and r not in seen:
                    seen.add(r)
                    comp.append(r)
                    queue.append(r)
        parts.append(SiteSet.from_points(comp, S.d))
    return parts


def is_connected(S, adjacency: str = "plain") -> bool:
    return len(clusters(S, adjacency)) <= 1


@dataclass(frozen=True)
class ComplementDecomposition:
    """Masks of the infinite complement cluster and of the origin's cluster of A^c U {0}.

    The masks cover ``window`` (inclusive corners ``lo``/``hi``). Points outside the
    window are always in the infinite cluster.
    """

    lo: Point
    hi: Point
    occupied: np.ndarray
    infinite_mask: np.ndarray
    zero_mask: np.ndarray
    zero_reaches_infinity: bool

    def _local(self, p):
        idx = tuple(int(c) - l for c, l in zip(p, self.lo))
        if any(i < 0 or i >= n for i, n in zip(idx, self.infinite_mask.shape)):
            return None
        return idx

    def is_infinite(self, p) -> bool:
        idx = self._local(p)
        return True if idx is None else bool(self.infinite_mask[idx])

    def in_zero(self, p) -> bool:
        idx = self._local(p)
        if idx is None:
            return self.zero_reaches_infinity
        return bool(self.zero_mask[idx])


def complement_decomposition(A: SiteSet, margin: int = 2) -> ComplementDecomposition:
    if margin < 2:
        raise ValueError("margin must be at least 2")
    if len(A) == 0 or A.d < 1:
        raise ValueError("complement decomposition needs a non-empty set")
    o = origin(A.d)
    arr = np.vstack([A.array(), np.array([o])])
    lo = arr.min(0) - margin
    hi = arr.max(0) + margin
    shape = tuple(int(v) for v in hi - lo + 1)
    occ = np.zeros(shape, dtype=bool)
    occ[tuple((A.array() - lo).T)] = True
    structure = ndimage.generate_binary_structure(A.d, 1)

    labels, _ = ndimage.label(~occ, structure=structure)
    # the outer shell of the window is complement and connected
    shell_label = labels[(0,) * A.d]
    infinite = labels == shell_label

    zero_idx = tuple(int(v) for v in -lo)
    free0 = ~occ
    free0[zero_idx] = True
    labels0, _ = ndimage.label(free0, structure=structure)
    zero = labels0 == labels0[zero_idx]
    reaches = bool(zero[(0,) * A.d])
    return ComplementDecomposition(
        tuple(int(v) for v in lo), tuple(int(v) for v in hi), occ, infinite, zero, reaches
    )


def outside_neighborhood(A: SiteSet, y: Sequence[int], variant: str = "all",
                         adjacency: str = "plain",
                         decomp: ComplementDecomposition | None = None) -> list[Point]:
    """N^A(y) and its infinite/zero-cluster restrictions (plain or star)."""
    y = tuple(y)
    if y not in A:
        raise ValueError(f"{y} is not in the set")
    return _outside(A, y, variant, adjacency, decomp)


def _outside(A, y, variant, adjacency, decomp):
    out = [q for q in _nbrs(y, adjacency) if q not in A]
    if variant == "all":
        return out
    if decomp is None:
        decomp = complement_decomposition(A)
    if variant == "infinite":
        return [q for q in out if decomp.is_infinite(q)]
    if variant == "zero":
        return [q for q in out if decomp.in_zero(q)]
    raise ValueError(f"unknown variant {variant!r}")


_BOUNDARY_KINDS = {
    "outer": ("outer", "all"), "inner": ("inner", "all"),
    "outer_ext": ("outer", "infinite"), "inner_ext": ("inner", "infinite"),
    "outer_zero": ("outer", "zero"), "inner_zero": ("inner", "zero"),
}


def boundary(A: SiteSet, kind: str = "outer", adjacency: str = "plain",
             decomp: ComplementDecomposition | None = None) -> SiteSet:
    """Outer/inner vertex boundary of A, optionally restricted to A^c_inf or A^c_0."""
    side, variant = _BOUNDARY_KINDS[kind]
    if variant != "all" and decomp is None:
        decomp = complement_decomposition(A)
    pts = set()
    for y in A.points:
        nb = _outside(A, y, variant, adjacency, decomp)
        if side == "outer":
            pts.update(nb)
        elif nb:
            pts.add(y)
    return SiteSet.from_points(pts, A.d)


@dataclass(frozen=True)
class LatticePath:
    vertices: tuple[Point, ...]
    kind: str = "plain"

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("a path has at least one vertex")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if not _adjacent(a, b, self.kind):
                raise ValueError(f"malformed step {a} -> {b}")

    @classmethod
    def from_points(cls, pts, kind="plain"):
        return cls(tuple(tuple(int(c) for c in p) for p in pts), kind)

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def range(self) -> SiteSet:
        return SiteSet.from_points(self.vertices)

    def __add__(self, other: "LatticePath") -> "LatticePath":
        if other.vertices[0] != self.vertices[-1]:
            raise ValueError("paths do not share an endpoint")
        return LatticePath(self.vertices + other.vertices[1:], self.kind)


@dataclass(frozen=True)
class PathInfo:
    is_self_avoiding: bool
    is_circuit: bool
    length: int
    range: SiteSet


def path_ops(eta: LatticePath) -> PathInfo:
    v = eta.vertices
    L = len(v) - 1
    self_avoiding = len(set(v)) == len(v)
    circuit = L > 0 and v[0] == v[-1] and len(set(v[:-1])) == L
    return PathInfo(self_avoiding, circuit, L, eta.range())


def straight_path(start: Sequence[int], axis: int, length: int, sign: int = 1) -> LatticePath:
    pts = []
    for k in range(length + 1):
        q = list(start)
        q[axis] += sign * k
        pts.append(q)
    return LatticePath.from_points(pts)


def box_points(radius: int, d: int) -> list[Point]:
    """Lambda(radius), lexicographic."""
    return list(itertools.product(range(-radius, radius + 1), repeat=d))


def l1_ball(radius: int, d: int) -> list[Point]:
    return [p for p in box_points(radius, d) if l1(p) <= radius]


def l1_ball_array(radius: int, d: int) -> np.ndarray:
    """The L1 ball as an (N, d) array, built without Python loops."""
    axes = [np.arange(-radius, radius + 1)] * d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    return pts[np.abs(pts).sum(1) <= radius]
