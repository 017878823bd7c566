"""Vectorised random-walk estimators used as independent checks on the exact solvers.

Walkers are simulated in batches; batch b draws from the stream
``SeedSequence([seed, b])`` so results depend only on (parameters, seed)
however the batches are scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import MeasureVector
from .lattice import LatticePath, SiteSet, l1, path_ops

BATCH = 1 << 14


@dataclass
class McEstimate:
    value: object
    stderr: object
    samples: int
    seed: int
    kill_radius: int | None = None
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        val = self.value.to_json() if isinstance(self.value, MeasureVector) else self.value
        err = self.stderr.tolist() if isinstance(self.stderr, np.ndarray) else self.stderr
        return {"value": val, "stderr": err, "samples": self.samples, "seed": self.seed,
                "kill_radius": self.kill_radius, **({"info": self.info} if self.info else {})}


def _rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(batch)])))


def _batches(samples: int):
    b = 0
    done = 0
    while done < samples:
        m = min(BATCH, samples - done)
        yield b, m
        b += 1
        done += m


def _steps(d: int) -> np.ndarray:
    out = np.zeros((2 * d, d), dtype=np.int64)
    for i in range(d):
        out[2 * i, i] = 1
        out[2 * i + 1, i] = -1
    return out


class _Grid:
    """Labels on the box [-K, K]^d: -1 free, k >= 0 index of a set point."""

    def __init__(self, A: SiteSet, K: int):
        self.K = K
        self.d = A.d
        self.lab = np.full((2 * K + 1,) * A.d, -1, dtype=np.int64)
        arr = A.array() + K
        self.lab[tuple(arr.T)] = np.arange(len(A))

    def label(self, pos):
        return self.lab[tuple((pos + self.K).T)]


def _sphere_points(r: int, d: int) -> np.ndarray:
    axes = [np.arange(-r, r + 1)] * d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    return pts[np.abs(pts).sum(1) == r]


def mc_hitting_far(A: SiteSet, start_radius: int, samples: int, seed: int,
                   kill_factor: int = 8, step_cap: int = 10_000_000) -> McEstimate:
    """First-hit distribution of A for walkers started uniformly on the L1 sphere.

    Walkers that leave the box of half-width kill_factor * start_radius are
    restarted on the sphere in d = 2 (counted in ``info['restarts']``) and
    discarded in d >= 3 (``info['conditioning_fraction']`` is the kept share).
    """
    d = A.d
    R = max(l1(p) for p in A.points)
    if start_radius <= 2 * A.radius() or start_radius <= R:
        raise ValueError("start radius must exceed twice the set radius")
    K = kill_factor * start_radius
    grid = _Grid(A, K)
    sphere = _sphere_points(start_radius, d)
    steps = _steps(d)
    counts = np.zeros(len(A), dtype=np.int64)
    restarts = 0
    killed = 0
    capped = 0
    for b, m in _batches(samples):
        rng = _rng(seed, b)
        pos = sphere[rng.integers(len(sphere), size=m)]
        alive = np.arange(m)
        nsteps = np.zeros(m, dtype=np.int64)
        while alive.size:
            pos[alive] += steps[rng.integers(2 * d, size=alive.size)]
            nsteps[alive] += 1
            p = pos[alive]
            out = np.abs(p).max(1) >= K
            if out.any():
                idx = alive[out]
                if d == 2:
                    restarts += idx.size
                    pos[idx] = sphere[rng.integers(len(sphere), size=idx.size)]
                else:
                    killed += idx.size
                    alive = alive[~out]
                    p = p[~out]
            lab = grid.label(p)
            hit = lab >= 0
            if hit.any():
                np.add.at(counts, lab[hit], 1)
                alive = alive[~hit]
            over = nsteps[alive] >= step_cap
            if over.any():
                capped += int(over.sum())
                alive = alive[~over]
    n = int(counts.sum())
    if n == 0:
        raise RuntimeError("no walker reached the set")
    w = counts / n
    se = np.sqrt(w * (1 - w) / n)
    mv = MeasureVector(A.points, w, "monte_carlo", float(se.max()))
    info = {"hits": n}
    if d == 2:
        info["restarts"] = restarts
    else:
        info["conditioning_fraction"] = n / samples
    if capped:
        info["capped"] = capped
    return McEstimate(mv, se, n, seed, K, info)


def mc_escape(A: SiteSet, x, kill_radius: int, samples: int, seed: int,
              bracket: bool = True) -> McEstimate:
    """Share of walkers from x in A reaching L-infinity distance kill_radius before
    returning to A; also reports the bracket [p(1 - delta), p]."""
    d = A.d
    if d < 3:
        raise ValueError("escape probabilities need d >= 3")
    x = tuple(x)
    if x not in A:
        raise ValueError("start must be in the set")
    if kill_radius <= A.radius() + 1:
        raise ValueError("kill radius too small")
    grid = _Grid(A, kill_radius)
    steps = _steps(d)
    x0 = np.array(x, dtype=np.int64)
    success = 0
    for b, m in _batches(samples):
        rng = _rng(seed, b)
        pos = np.tile(x0, (m, 1))
        alive = np.arange(m)
        while alive.size:
            pos[alive] += steps[rng.integers(2 * d, size=alive.size)]
            p = pos[alive]
            esc = np.abs(p).max(1) >= kill_radius
            success += int(esc.sum())
            alive, p = alive[~esc], p[~esc]
            back = grid.label(p) >= 0
            alive = alive[~back]
    phat = success / samples
    se = float(np.sqrt(phat * (1 - phat) / samples))
    info = {}
    if bracket:
        from .solver import return_bound
        # the L1 ball of radius kill_radius lies inside the stopping box
        delta = return_bound(A, kill_radius)
        info = {"delta": delta, "bracket": [phat * (1 - delta), phat]}
    return McEstimate(phat, se, samples, seed, kill_radius, info)


def mc_path_traversal(eta: LatticePath, samples: int, seed: int) -> McEstimate:
    """Share of walkers from eta(0) that reach the last vertex before leaving the path's range."""
    info = path_ops(eta)
    if not info.is_self_avoiding:
        raise ValueError("path must be self-avoiding")
    L = info.length
    if L == 0:
        return McEstimate(1.0, 0.0, samples, seed)
    verts = list(eta.vertices)
    d = len(verts[0])
    index = {v: i for i, v in enumerate(verts)}
    nb = np.full((L + 1, 2 * d), -1, dtype=np.int64)
    for i, v in enumerate(verts):
        for k in range(2 * d):
            q = list(v)
            q[k // 2] += 1 if k % 2 == 0 else -1
            nb[i, k] = index.get(tuple(q), -1)
    success = 0
    for b, m in _batches(samples):
        rng = _rng(seed, b)
        state = np.zeros(m, dtype=np.int64)
        while state.size:
            state = nb[state, rng.integers(2 * d, size=state.size)]
            done = state == L
            success += int(done.sum())
            state = state[(state >= 0) & ~done]
    phat = success / samples
    return McEstimate(phat, float(np.sqrt(phat * (1 - phat) / samples)), samples, seed)
