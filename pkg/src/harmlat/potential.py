"""Lattice Green's function (d >= 3) and the planar potential kernel.

Both are evaluated from one-dimensional integral representations with adaptive
quadrature and cached by the sorted absolute coordinates of the argument.

* d >= 3: G(x) = int_0^inf prod_i e^{-t/d} I_{x_i}(t/d) dt, which is the Fourier
  integral after integrating out the angular variables (continuous-time walk
  with unit jump rate spends one unit of time per visit on average).
* d = 2: a(m, n) = (2/pi) int_0^pi (1 - cos(m k) s(k)^|n|) / sqrt(b^2 - 1) dk with
  b = 2 - cos k and s = b - sqrt(b^2 - 1), the Fourier integral after the inner
  integral is done in closed form. Far away the standard expansion
  (2/pi) ln|x| + kappa - cos(4 theta) / (6 pi |x|^2) is used.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

KAPPA = (2 * np.euler_gamma + math.log(8)) / math.pi
# beyond this Euclidean norm the planar kernel uses its asymptotic expansion
FAR_FIELD_2D = 200.0


def _key(x) -> tuple[int, ...]:
    return tuple(sorted(abs(int(c)) for c in x))


def _kernel_2d_quad(key: tuple[int, int]) -> float:
    m, n = key  # m <= n: cosine of the small index, power of the large one
    if m == 0 and n == 0:
        return 0.0

    def f(k):
        b = 2.0 - math.cos(k)
        s = math.sqrt(b * b - 1.0)
        if s == 0.0:
            return float(n)  # limit k -> 0
        return (1.0 - math.cos(m * k) * (b - s) ** n) / s

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, 0.0, math.pi, limit=500, epsabs=1e-15, epsrel=1e-14)
    return 2.0 / math.pi * val


def _kernel_2d_far(key) -> float:
    m, n = key
    r2 = m * m + n * n
    cos4 = (m ** 4 - 6 * m * m * n * n + n ** 4) / r2 ** 2
    return 2.0 / math.pi * 0.5 * math.log(r2) + KAPPA - cos4 / (6 * math.pi * r2)


def potential_kernel_2d(x) -> float:
    key = _key(x)
    if math.hypot(*key) > FAR_FIELD_2D:
        return _kernel_2d_far(key)
    return _kernel_2d_quad(key)


def _green_quad(key: tuple[int, ...]) -> float:
    d = len(key)

    def f(t):
        v = 1.0
        for c in key:
            v *= special.ive(c, t / d)
        return v

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, 0.0, np.inf, limit=1000, epsabs=1e-15, epsrel=1e-13)
    return val


def free_green(x) -> float:
    """Expected number of visits to x for the walk started at the origin (d >= 3)."""
    key = _key(x)
    if len(key) < 3:
        raise ValueError("the free Green's function needs d >= 3")
    return _green_quad(key)


@dataclass
class PotentialTable:
    """Memoised kernel values; read-only once filled."""

    kind: str
    d: int
    tol: float = 1e-10
    cache: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "potential_kernel_d2":
            if self.d != 2:
                raise ValueError("the potential kernel table is planar")
            self._eval = lambda k: (_kernel_2d_far(k) if math.hypot(*k) > FAR_FIELD_2D
                                    else _kernel_2d_quad(k))
        elif self.kind == "free_green_d3plus":
            if self.d < 3:
                raise ValueError("the free Green table needs d >= 3")
            self._eval = _green_quad
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    def value(self, x) -> float:
        key = _key(x)
        v = self.cache.get(key)
        if v is None:
            v = self._eval(key)
            self.cache[key] = v
        return v

    __call__ = value

    def values(self, diffs: np.ndarray) -> np.ndarray:
        """Vectorised lookup for an integer array of shape (..., d)."""
        diffs = np.asarray(diffs, dtype=np.int64)
        flat = np.sort(np.abs(diffs.reshape(-1, self.d)), axis=1)
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        vals = np.array([self.value(tuple(int(c) for c in u)) for u in uniq])
        return vals[inv.reshape(-1)].reshape(diffs.shape[:-1])

    def matrix(self, P, Q) -> np.ndarray:
        """Kernel matrix K[i, j] = k(P[i] - Q[j])."""
        P = np.asarray(P, dtype=np.int64).reshape(-1, self.d)
        Q = np.asarray(Q, dtype=np.int64).reshape(-1, self.d)
        return self.values(P[:, None, :] - Q[None, :, :])

    def laplacian_residual(self, x) -> float:
        """k(x) - mean of k over the neighbours of x, minus the expected point mass."""
        x = tuple(int(c) for c in x)
        s = 0.0
        for i in range(self.d):
            for sg in (1, -1):
                y = list(x)
                y[i] += sg
                s += self.value(y)
        mean = s / (2 * self.d)
        at0 = all(c == 0 for c in x)
        if self.kind == "potential_kernel_d2":
            # a is harmonic off 0 and its neighbour mean at 0 is 1
            return mean - self.value(x) - (1.0 if at0 else 0.0)
        return self.value(x) - mean - (1.0 if at0 else 0.0)


_SHARED: dict = {}


def shared_table(d: int) -> PotentialTable:
    """Process-wide table for dimension d (filled lazily)."""
    if d not in _SHARED:
        kind = "potential_kernel_d2" if d == 2 else "free_green_d3plus"
        _SHARED[d] = PotentialTable(kind, d)
    return _SHARED[d]


def potential_table(kind: str, extent: int, tol: float = 1e-10, d: int | None = None) -> PotentialTable:
    """Fill a table on the box of half-width ``extent`` and check its defining identities."""
    if d is None:
        d = 2 if kind == "potential_kernel_d2" else 3
    if extent > 64:
        raise ValueError("extent beyond the cache budget")
    table = PotentialTable(kind, d, tol)
    import itertools
    for key in itertools.combinations_with_replacement(range(extent + 2), d):
        table.value(key)
    bad = []
    for key in itertools.combinations_with_replacement(range(extent + 1), d):
        r = table.laplacian_residual(key)
        if abs(r) > tol:
            bad.append((key, r))
    if bad:
        raise ArithmeticError(f"kernel identities violated at {bad[:3]}")
    return table
