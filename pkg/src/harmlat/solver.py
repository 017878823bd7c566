"""Harmonic measures, Green's functions, escape probabilities and removal prices.

Two independent routes are provided for the from-infinity quantities:

* truncated chains: the walk on a finite ball with the exterior collapsed or
  absorbing, solved by sparse LU (``wired_harmonic_measure``, ``truncated_*``);
* dense potential solves over the set itself, using the planar potential
  kernel (d = 2) or the free Green's function (d >= 3).

When a dense answer contains very small entries it is refined on a box around
the set: the exact far-field values from the dense solve become boundary data
for a sparse M-matrix solve, whose substitution steps involve no cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import linalg

from .chain import MeasureVector, lattice_chain
from .lattice import (
    SiteSet,
    boundary,
    complement_decomposition,
    l1,
    l1_ball_array,
    neighbors,
    origin,
)
from .potential import PotentialTable, shared_table


class ToleranceError(ArithmeticError):
    """Requested tolerance not reached; ``best`` holds the last estimate."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


# closed forms -----------------------------------------------------------------

def gamma_path(L: int, d: int) -> float:
    """Probability that the walk from one end of a straight L-step path reaches the
    other end without leaving the path."""
    s = math.sqrt(d * d - 1)
    return 2 * s / ((d + s) ** (L + 1) - (d - s) ** (L + 1))


@dataclass
class TunnelSolution:
    values: np.ndarray
    roots: tuple[float, float]


def tunnel_recurrence(b: float, n: int, c: float = 1.0, far: float = 0.0) -> TunnelSolution:
    """Solve q_i = (q_{i-1} + q_{i+1}) / b for 1 < i < n with q_1 = c and q_n = far.

    ``values[i-1]`` is q_i. The characteristic roots are (b +- sqrt(b^2-4)) / 2.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    disc = math.sqrt(b * b - 4)
    roots = ((b - disc) / 2, (b + disc) / 2)
    q = np.empty(n)
    q[0], q[-1] = c, far
    m = n - 2
    if m > 0:
        ab = np.zeros((3, m))
        ab[0, 1:] = -1.0
        ab[1, :] = b
        ab[2, :-1] = -1.0
        rhs = np.zeros(m)
        rhs[0] += c
        rhs[-1] += far
        q[1:-1] = linalg.solve_banded((1, 1), ab, rhs)
    return TunnelSolution(q, roots)


# dense routes -----------------------------------------------------------------

def _table(d: int, table: PotentialTable | None) -> PotentialTable:
    return table if table is not None else shared_table(d)


def dense_kernel_system(A: SiteSet, table: PotentialTable | None = None):
    """Planar harmonic measure from the potential kernel.

    Solves sum_y a(x - y) h(y) = c for x in A with sum h = 1; returns (h, c).
    """
    if A.d != 2:
        raise ValueError("the potential-kernel system is planar")
    t = _table(2, table)
    n = len(A)
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = t.matrix(A.array(), A.array())
    K[:n, n] = -1.0
    K[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    sol = linalg.solve(K, rhs)
    return sol[:n], float(sol[n])


def equilibrium_measure(A: SiteSet, table: PotentialTable | None = None):
    """Escape probabilities e(x) = P_x(no return to A), from sum_y G(x-y) e(y) = 1 on A."""
    if A.d < 3:
        raise ValueError("escape probabilities need d >= 3")
    t = _table(A.d, table)
    K = t.matrix(A.array(), A.array())
    e = linalg.solve(K, np.ones(len(A)), assume_a="pos")
    res = float(np.abs(K @ e - 1.0).max())
    return e, res


@dataclass
class EscapeCapacity:
    es: dict
    cap: float
    residual: float
    bracket_width: float | None = None


def escape_capacity(A: SiteSet, table: PotentialTable | None = None,
                    refine: bool = True) -> EscapeCapacity:
    e, res = equilibrium_measure(A, table)
    if refine and len(A) > 1 and e.min() < 1e-7 * e.max():
        e = boxed_escape(A, table)
    return EscapeCapacity(dict(zip(A.points, e.tolist())), float(e.sum()), res)


def _far_values(A: SiteSet, W: np.ndarray, table: PotentialTable | None):
    """Exact exterior data on points W: g_A (d = 2) or P_w(never hit A) (d >= 3)."""
    t = _table(A.d, table)
    if A.d == 2:
        h, c = dense_kernel_system(A, t)
        return t.matrix(W, A.array()) @ h - c
    e, _ = equilibrium_measure(A, t)
    return 1.0 - t.matrix(W, A.array()) @ e


def _box_domain(A: SiteSet, margin: int) -> np.ndarray:
    lo, hi = A.bbox
    lo = np.minimum(np.array(lo), 0) - margin
    hi = np.maximum(np.array(hi), 0) + margin
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, A.d)


def _boxed_flux(A: SiteSet, table, margin: int = 2) -> np.ndarray:
    """Per-site flux of the exterior solution through a box around A."""
    ch = lattice_chain(_box_domain(A, margin), A.points, A.d)
    ext = np.flatnonzero(ch.exterior)
    bvals = _far_values(A, ch.absorbing_pts[ext], table)
    rhs = ch.R[:, ext] @ np.clip(bvals, 0.0, None)
    f, _ = ch.solve(rhs)
    flux = np.zeros(len(A))
    k = 2 * A.d
    for i, y in enumerate(A.points):
        s = 0.0
        for u in neighbors(y):
            try:
                s += f[ch.t_index(u)]
            except KeyError:
                pass
        flux[i] = s / k
    return flux


def boxed_escape(A: SiteSet, table=None, margin: int = 2) -> np.ndarray:
    return _boxed_flux(A, table, margin)


BOX_CELL_BUDGET = 400_000


def _box_cells(A: SiteSet, margin: int) -> int:
    lo, hi = A.bbox
    lo = np.minimum(np.array(lo), 0) - margin
    hi = np.maximum(np.array(hi), 0) + margin
    return int(np.prod(hi - lo + 1))


def dense_harmonic_measure(A: SiteSet, table=None, refine: bool = True) -> MeasureVector:
    """Harmonic measure from infinity by the dense route (kernel for d=2, Es/cap for d>=3)."""
    if A.d == 2:
        h, c = dense_kernel_system(A, table)
        method = "dense_kernel"
        res = 0.0
    else:
        h, res = equilibrium_measure(A, table)
        method = "es_over_cap"
    h = np.asarray(h)
    refined = False
    if (refine and len(A) > 1 and h.min() < 1e-7 * h.max()
            and _box_cells(A, 2) <= BOX_CELL_BUDGET):
        h = _boxed_flux(A, table)
        refined = True
    h = np.clip(h, 0.0, None)
    total = h.sum()
    err = abs(total - 1.0) if A.d == 2 and not refined else res
    mv = MeasureVector(A.points, h / total, method, float(err))
    mv.info["refined"] = refined
    if A.d >= 3:
        mv.info["cap"] = float(total)
    return mv


# wired route ------------------------------------------------------------------

def wired_harmonic_measure(A: SiteSet, r: int) -> MeasureVector:
    """Collapse everything outside the L1 ball B(r) to one vertex, start there, and
    condition on reaching A before coming back."""
    if any(l1(p) >= r for p in A.points):
        raise ValueError("the set must lie strictly inside the ball")
    d = A.d
    ch = lattice_chain(l1_ball_array(r, d), A.points, d)
    ext = np.flatnonzero(ch.exterior)
    # set points with no neighbour in the ball's free part never get hit
    reached = {tuple(int(c) for c in q) for q in ch.absorbing_pts}
    cols_A = [ch.a_index(p) if p in reached else -1 for p in A.points]
    # multiplicity of the edges to the collapsed vertex = first-step law from it
    mult = np.asarray(ch.R[:, ext].sum(axis=1)).ravel() * (2 * d)
    start = mult / mult.sum()
    # distribution of the first hit of A (or the collapsed vertex) from each start
    u, res = ch.solve_transposed(start)
    hit = np.asarray(ch.R.T @ u).ravel()
    w = np.array([hit[c] if c >= 0 else 0.0 for c in cols_A])
    back = hit[ext].sum()
    weights = w / w.sum()
    mv = MeasureVector(A.points, weights, "wired_r", float(res))
    mv.info.update(radius=r, return_probability=float(back))
    return mv


# measured leading exponents of the wired-measure error in r; the next
# correction is one power higher
_WIRED_RATE = {2: 2.0, 3: 3.0}
WIRED_CELL_BUDGET = {2: 1_700_000, 3: 120_000}


def wired_extrapolated(A: SiteSet, tol: float = 1e-7, r0: int | None = None,
                       max_doublings: int = 5) -> MeasureVector:
    """Wired measures at r0, 2 r0, ... combined by a two-level Richardson table.

    The error estimate is the max-norm gap between the last two diagonal
    entries of the table.
    """
    d = A.d
    R = max(l1(p) for p in A.points)
    if r0 is None:
        r0 = 4 * (A.radius() + 1)
    r0 = max(r0, R + 1)
    p = _WIRED_RATE.get(d, float(d))
    budget = WIRED_CELL_BUDGET.get(d, 50_000)
    rows: list[list[np.ndarray]] = []
    radii = []
    best = None
    for k in range(max_doublings + 1):
        r = r0 * 2 ** k
        if (2 * r) ** d / math.factorial(d) > budget:
            break
        row = [wired_harmonic_measure(A, r).weights]
        radii.append(r)
        for j in range(1, min(k, 2) + 1):
            f = 2.0 ** (p + j - 1)
            row.append((f * row[j - 1] - rows[-1][j - 1]) / (f - 1.0))
        rows.append(row)
        if k >= 1:
            cur, prev = row[-1], rows[-2][-1]
            err = float(np.abs(cur - prev).max())
            best = MeasureVector(A.points, cur / cur.sum(), "extrapolated", err)
            best.info["radii"] = list(radii)
            if err < tol:
                return best
    if best is None:
        best = MeasureVector(A.points, rows[-1][0] if rows else np.full(len(A), np.nan),
                             "wired_r", float("inf"))
        best.info["radii"] = list(radii)
    raise ToleranceError(f"wired extrapolation stopped at error {best.error_estimate:.3g}", best)


def harmonic_measure_infinity(A: SiteSet, method: str = "auto", tol: float = 1e-6,
                              table=None) -> MeasureVector:
    """H_A on the points of A.

    ``method``: "wired" (extrapolated wired measures), "dense" (potential
    solve), "escape" (d >= 3 equilibrium measure), or "auto" (wired in d=2,
    escape otherwise).
    """
    if len(A) == 0:
        raise ValueError("empty set")
    if len(A) == 1:
        return MeasureVector(A.points, np.ones(1), "dense_kernel" if A.d == 2 else "es_over_cap")
    if method == "auto":
        method = "wired" if A.d == 2 else "escape"
    if method == "wired":
        return wired_extrapolated(A, tol)
    if method in ("dense", "escape"):
        if method == "escape" and A.d < 3:
            raise ValueError("the escape route needs d >= 3")
        return dense_harmonic_measure(A, table)
    raise ValueError(f"unknown method {method!r}")


# Green's functions ------------------------------------------------------------

def _dense_hit_and_g(A: SiteSet, x, table):
    """First-hit law of A from x (d=2 also returns g_A(x))."""
    t = _table(A.d, table)
    X = np.asarray([x], dtype=np.int64)
    n = len(A)
    if A.d == 2:
        K = np.zeros((n + 1, n + 1))
        K[:n, :n] = t.matrix(A.array(), A.array())
        K[:n, n] = 1.0
        K[n, :n] = 1.0
        rhs = np.zeros(n + 1)
        rhs[:n] = t.matrix(X, A.array())[0]
        rhs[n] = 1.0
        sol = linalg.solve(K, rhs)
        return sol[:n], float(sol[n])
    K = t.matrix(A.array(), A.array())
    hx = linalg.solve(K, t.matrix(A.array(), X)[:, 0], assume_a="pos")
    return hx, None


def green_killed_dense(A: SiteSet, x, y, table=None) -> float:
    """G_A(x, y) on the whole lattice from the potential kernel or free Green's function."""
    x, y = tuple(x), tuple(y)
    if x in A or y in A:
        return 0.0
    t = _table(A.d, table)
    hx, g = _dense_hit_and_g(A, x, t)
    col = t.matrix(A.array(), np.asarray([y]))[:, 0]
    if A.d == 2:
        return float(hx @ col + g - t.value(np.subtract(x, y)))
    return float(t.value(np.subtract(x, y)) - hx @ col)


def truncated_green(A: SiteSet, x, y, radius: int) -> float:
    """G killed on A and on leaving the box Lambda(radius)."""
    d = A.d
    axes = [np.arange(-radius, radius + 1)] * d
    dom = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    ch = lattice_chain(dom, A.points, d)
    col, _ = ch.green_column(tuple(y))
    return float(col[ch.t_index(tuple(x))])


def green_killed(A: SiteSet, x, y, tol: float = 1e-6, method: str = "dense", table=None):
    """G_A(x, y) = expected visits to y before hitting A. Returns (value, error estimate).

    ``truncated``: in d=2 three box radii are fitted to G_r = G - C/(ln r + D);
    in d>=3 one large box is solved and the tail bound max G(w - y) over the
    exterior is reported.
    """
    x, y = tuple(x), tuple(y)
    if x in A or y in A:
        return 0.0, 0.0
    if method == "dense":
        return green_killed_dense(A, x, y, table), 0.0
    if method != "truncated":
        raise ValueError(f"unknown method {method!r}")
    R = max(A.radius(), max(abs(c) for c in x), max(abs(c) for c in y)) + 1
    if A.d >= 3:
        r = min(8 * R, 20)
        val = truncated_green(A, x, y, r)
        bound = shared_table(A.d).value((r - max(abs(c) for c in y),) + (0,) * (A.d - 1))
        return val, bound
    # fits of G - C/(ln r + D) through consecutive radius triples converge
    # roughly geometrically; an Aitken step on the fits removes most of the rest
    radii = [min(4 * R, 64) * 2 ** k for k in range(6)]
    radii = [r for r in radii if r <= 512] or [512]
    vals = [truncated_green(A, x, y, r) for r in radii]
    fits = [_log_fit(radii[k:k + 3], vals[k:k + 3]) for k in range(len(radii) - 2)]
    acc = [_aitken(fits[k:k + 3]) for k in range(len(fits) - 2)]
    if len(acc) >= 2:
        val, err = acc[-1], abs(acc[-1] - acc[-2])
    elif fits:
        val, err = fits[-1], abs(fits[-1] - fits[0]) if len(fits) > 1 else float("inf")
    else:
        val, err = vals[-1], float("inf")
    if err > tol:
        raise ToleranceError(f"truncated Green's function error {err:.3g}", val)
    return val, err


def _aitken(f) -> float:
    d1, d2 = f[1] - f[0], f[2] - f[1]
    den = d2 - d1
    return f[2] if den == 0 else f[2] - d2 * d2 / den


def _log_fit(radii, vals) -> float:
    """Limit of v(r) = G - C / (ln r + D) through three points."""
    l = [math.log(r) for r in radii]
    (v1, v2, v3) = vals
    # v_i = G - C/(l_i + D); eliminate by cross ratios
    d12, d23 = v2 - v1, v3 - v2
    if d12 == 0 or d23 == 0:
        return v3
    # (l2 + D)(l1 + D) d12 / (l2 - l1) = C = (l3 + D)(l2 + D) d23 / (l3 - l2)
    a = d12 / (l[1] - l[0])
    b = d23 / (l[2] - l[1])
    # a (l1 + D) = b (l3 + D)
    D = (b * l[2] - a * l[0]) / (a - b)
    C = a * (l[1] + D) * (l[0] + D)
    return v3 + C / (l[2] + D)


# removal prices ---------------------------------------------------------------

@dataclass
class RemovalPrice:
    rho: float
    error: float
    before: float
    after: float


def removal_price(A: SiteSet, y, z, tol: float = 1e-8, method: str = "dense",
                  table=None) -> RemovalPrice:
    """rho_{A,y}(z) = H_{A minus z}(y) / H_A(y)."""
    y, z = tuple(y), tuple(z)
    if y not in A or z not in A or y == z:
        raise ValueError("need distinct y, z in the set")
    before = harmonic_measure_infinity(A, method, tol, table)
    hy = before[y]
    if hy <= 0.0:
        raise ValueError("H_A(y) = 0")
    after = harmonic_measure_infinity(A.without(z), method, tol, table)
    hz = after[y]
    rho = hz / hy
    err = rho * (before.error_estimate / hy + after.error_estimate / max(hz, 1e-300))
    if rho < 1.0 - max(tol, err):
        raise ArithmeticError(f"removal price {rho} below one")
    return RemovalPrice(rho, err, hy, hz)


@dataclass
class MinPrice:
    z_star: tuple
    rho_min: float
    prices: dict = field(default_factory=dict)


def min_removal_price(A: SiteSet, y, tol: float = 1e-8, method: str = "dense",
                      table=None) -> MinPrice:
    y = tuple(y)
    if len(A) < 2:
        raise ValueError("need at least two points")
    base = harmonic_measure_infinity(A, method, tol, table)
    hy = base[y]
    if hy <= 0.0:
        raise ValueError("H_A(y) = 0")
    prices = {}
    for z in A.points:
        if z == y:
            continue
        after = harmonic_measure_infinity(A.without(z), method, tol, table)
        prices[z] = after[y] / hy
    z_star = min(prices, key=lambda k: (prices[k], k))
    return MinPrice(z_star, prices[z_star], prices)


def harmonic_at(A: SiteSet, y, table=None) -> float:
    """H_A(y) by the dense route with box refinement."""
    return dense_harmonic_measure(A, table)[tuple(y)]


# escape-probability removal ratios (d >= 3) -----------------------------------

@dataclass
class EscapeRatios:
    base: float
    ratios: dict
    es: dict


def escape_removal_ratios(A: SiteSet, x0=None, table=None, margin: int = 3,
                          block: int = 256) -> EscapeRatios:
    """Es_{A minus z}(x0) / Es_A(x0) for every z in A other than x0.

    With f the escape function of A, p_z = P_z(first return to A is at z) and
    q_z = P_{x0}(first return to A is at z),
        Es_{A-z}(x0) = Es_A(x0) + q_z Es_A(z) / (1 - p_z).
    All pieces come from one factorisation of the killed walk on a box around A,
    whose exterior is replaced by the exact first-hit law from the dense solve.
    """
    d = A.d
    if d < 3:
        raise ValueError("escape ratios need d >= 3")
    x0 = origin(d) if x0 is None else tuple(x0)
    t = _table(d, table)
    ch = lattice_chain(_box_domain(A, margin), A.points, d)
    ext = np.flatnonzero(ch.exterior)
    W = ch.absorbing_pts[ext]
    KA = t.matrix(A.array(), A.array())
    e = linalg.solve(KA, np.ones(len(A)), assume_a="pos")
    KWA = t.matrix(W, A.array())
    f_ext = np.clip(1.0 - KWA @ e, 0.0, None)
    H_ext = np.clip(linalg.solve(KA, KWA.T, assume_a="pos").T, 0.0, None)

    cols_A = np.array([ch.a_index(p) for p in A.points])
    R = ch.R.tocsc()
    B = (R[:, cols_A] + R[:, ext] @ sp.csr_matrix(H_ext)).tocsc()  # first hit of A, by site
    f_int, _ = ch.solve(np.asarray(R[:, ext] @ f_ext).ravel())

    n = len(A)
    k = 2 * d
    nb_rows = []  # for each site: transient neighbour indices
    nb_direct = []  # for each site: indices of neighbouring sites
    es = np.zeros(n)
    for i, y in enumerate(A.points):
        rows, direct = [], []
        for u in neighbors(y):
            if u in A:
                direct.append(A.index[u])
            else:
                rows.append(ch.t_index(u))
        nb_rows.append(rows)
        nb_direct.append(direct)
        es[i] = f_int[rows].sum() / k
    i0 = A.index[x0]
    s = np.zeros(len(ch.transient))
    s[nb_rows[i0]] = 1.0 / k
    u, _ = ch.solve_transposed(s)
    q = np.asarray(B.T @ u).ravel()
    for j in nb_direct[i0]:
        q[j] += 1.0 / k
    p = np.zeros(n)
    lu = ch.lu()
    for start in range(0, n, block):
        idx = np.arange(start, min(n, start + block))
        X = lu.solve(B[:, idx].toarray())
        for c, j in enumerate(idx):
            p[j] = X[nb_rows[j], c].sum() / k
    base = es[i0]
    ratios = {}
    for j, z in enumerate(A.points):
        if j == i0:
            continue
        ratios[z] = 1.0 + q[j] * es[j] / ((1.0 - p[j]) * base)
    return EscapeRatios(float(base), ratios, dict(zip(A.points, es.tolist())))


def escape_bracket(A: SiteSet, r: int, table=None) -> dict:
    """Truncated-chain bracket for Es_A: the no-return probability up to the L1
    sphere of radius r bounds Es_A from above, and times (1 - delta) from below,
    where delta bounds the chance of coming back from that sphere."""
    d = A.d
    if d < 3:
        raise ValueError("escape probabilities need d >= 3")
    ch = lattice_chain(l1_ball_array(r, d), A.points, d)
    out = ch.exterior_mass()
    f, _ = ch.solve(out)
    k = 2 * d
    up = {}
    for y in A.points:
        s = 0.0
        for u in neighbors(y):
            if u in A:
                continue
            if l1(u) > r:
                s += 1.0
            else:
                s += f[ch.t_index(u)]
        up[y] = s / k
    delta = return_bound(A, r, table)
    return {"upper": up, "lower": {y: v * (1 - delta) for y, v in up.items()}, "delta": delta}


def return_bound(A: SiteSet, r: int, table=None) -> float:
    """Upper bound on P_w(hit A) over the L1 sphere of radius r: sum_y G(w-y)/G(0)
    evaluated at the Euclidean-closest possible distance."""
    t = _table(A.d, table)
    d = A.d
    dist = r / math.sqrt(d) - max(math.sqrt(sum(c * c for c in p)) for p in A.points)
    if dist <= 1:
        return 1.0
    g0 = t.value((0,) * d)
    # G decreases with Euclidean norm along an axis for these ranges; use the
    # continuum-corrected far field with a safety factor
    cd = d * math.gamma(d / 2 - 1) / (2 * math.pi ** (d / 2))
    gfar = 1.05 * cd * dist ** (2 - d)
    return min(1.0, len(A) * gfar / g0)


# truncated-chain identities ---------------------------------------------------

def box_chain(A: SiteSet, radius: int):
    d = A.d
    axes = [np.arange(-radius, radius + 1)] * d
    dom = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    return lattice_chain(dom, A.points, d)


def _hit_site(ch, x, target) -> float:
    """P_x(first absorption at target), x transient."""
    if not ch.is_transient(x):
        return 1.0 if tuple(x) == tuple(target) else 0.0
    u, _ = ch.green_row(tuple(x))
    try:
        j = ch.a_index(tuple(target))
    except KeyError:
        return 0.0
    return float((ch.R[:, j].T @ u)[0])


def _hit_plus(ch, A: SiteSet, v, target) -> float:
    """P_v(tau^+_A = tau_target before leaving the box) for v in A."""
    k = 2 * A.d
    s = 0.0
    for u in neighbors(v):
        if u in A:
            s += 1.0 if u == tuple(target) else 0.0
        elif ch.is_transient(u):
            s += _hit_site(ch, u, target)
    return s / k


@dataclass
class LastExit:
    lhs: float
    rhs: float
    diff: float


def last_exit_check(A1: SiteSet, A2: SiteSet, y, z, radius: int) -> LastExit:
    """Both sides of P_z(tau_{A1} = tau_y) = sum_v G_{A1}(z, v) P_v(tau^+_{A2} = tau_y),
    v over A2 minus A1, on the walk killed outside Lambda(radius)."""
    y, z = tuple(y), tuple(z)
    if not set(A1.points) <= set(A2.points) or y not in A1 or z not in A2 or z in A1:
        raise ValueError("need A1 in A2, y in A1, z in A2 minus A1")
    c1 = box_chain(A1, radius)
    lhs = _hit_site(c1, z, y)
    grow, _ = c1.green_row(z)
    c2 = box_chain(A2, radius)
    rhs = 0.0
    for v in A2.points:
        if v in A1:
            continue
        rhs += grow[c1.t_index(v)] * _hit_plus(c2, A2, v, y)
    return LastExit(lhs, rhs, abs(lhs - rhs))


def green_identities(A: SiteSet, A_sub: SiteSet, x, y, radius: int) -> dict:
    """Residuals of the symmetry, return-time, hitting and decomposition identities for
    the walk killed on A and outside Lambda(radius). ``A_sub`` must be a subset of A."""
    x, y = tuple(x), tuple(y)
    ch = box_chain(A, radius)
    gx, _ = ch.green_row(x)
    gy, _ = ch.green_row(y)
    Gxy, Gyx = gx[ch.t_index(y)], gy[ch.t_index(x)]
    Gxx, Gyy = gx[ch.t_index(x)], gy[ch.t_index(y)]
    out = {"symmetry": abs(Gxy - Gyx)}
    # return-time identity through the chain killed also at x
    Ax = A.union([x])
    cx = box_chain(Ax, radius)
    back = _hit_plus(cx, Ax, x, x)
    out["return"] = abs(Gxx * (1.0 - back) - 1.0)
    # hitting identity through the chain killed also at y
    if x != y:
        Ay = A.union([y])
        cy = box_chain(Ay, radius)
        out["hitting"] = abs(Gxy - _hit_site(cy, x, y) * Gyy)
    else:
        out["hitting"] = 0.0
    # decomposition over A minus A_sub
    cs = box_chain(A_sub, radius)
    gsub, _ = cs.green_column(y)
    rhs = Gxy
    for w in A.points:
        if w in A_sub:
            continue
        rhs += _hit_site(ch, x, w) * gsub[cs.t_index(w)]
    out["decomposition"] = abs(gsub[cs.t_index(x)] - rhs)
    return out


# Lemma-style ratio diagnostic -------------------------------------------------

@dataclass
class RatioBound:
    ratio: float
    bound: float
    holds: bool


def ratio_upper_bound_diagnostic(A: SiteSet, D, F1, F2, tol: float = 1e-9,
                                 table=None) -> RatioBound:
    """Compare the removal ratio at the origin with the max Green's-function ratio over
    the inner-boundary sets built from F1 (exterior side) and F2 (origin side).

    In d=2 the ratio is of harmonic measures; in d>=3 of escape probabilities.
    """
    o = origin(A.d)
    D = SiteSet.from_points(D, A.d)
    F1 = SiteSet.from_points(F1, A.d)
    F2 = SiteSet.from_points(F2, A.d)
    Aset = set(A.points)
    if not set(D.points) <= Aset or o in D:
        raise ValueError("D must be a subset of A without the origin")
    if not set(F1.points) <= set(F2.points):
        raise ValueError("need F1 inside F2")
    for F in (F1, F2):
        if set(F.points) & Aset != set(D.points):
            raise ValueError("F meets A outside D")
    At = A.without(*D.points)
    U1, U2 = A.union(F1.points), A.union(F2.points)
    hat = [v for v in boundary(U1, "inner_ext").points if v not in At]
    check = [v for v in boundary(U2, "inner_zero").points if v not in At]
    if A.d == 2:
        before = dense_harmonic_measure(A, table)[o]
        after = dense_harmonic_measure(At, table)[o]
    else:
        before = escape_capacity(A, table).es[o]
        after = escape_capacity(At, table).es[o]
    ratio = after / before if before > 0 else float("inf")
    bound = 0.0
    for v1 in hat:
        for v2 in check:
            gt = green_killed_dense(At, v1, v2, table)
            ga = green_killed_dense(A, v1, v2, table)
            if ga <= 1e-14:
                if gt > 1e-12:
                    bound = float("inf")
                continue
            bound = max(bound, gt / ga)
    if not hat or not check:
        bound = max(bound, 1.0)
    return RatioBound(ratio, bound, ratio <= bound + tol)


# gallery graphs ---------------------------------------------------------------

def graph_wired_measure(gc) -> MeasureVector:
    """Wired harmonic measure of the targets of a GalleryChain from its collapsed vertex."""
    if gc.zeta is None:
        raise ValueError("the graph has no collapsed vertex")
    ch = gc.chain()
    deg = {}
    start = np.zeros(len(ch.transient))
    direct = np.zeros(len(ch.absorbing))
    for e in gc.edges:
        u, v = e[0], e[1]
        w = float(e[2]) if len(e) > 2 else 1.0
        if u == v:
            continue
        for a, b in ((u, v), (v, u)):
            if a == gc.zeta:
                if ch.is_transient(b):
                    start[ch.t_index(b)] += w
                else:
                    direct[ch.a_index(b)] += w
    total = start.sum() + direct.sum()
    u, res = ch.solve_transposed(start / total)
    hit = np.asarray(ch.R.T @ u).ravel() + direct / total
    idx = [ch.a_index(t) for t in gc.targets]
    w = hit[idx]
    mv = MeasureVector(tuple(gc.targets), w / w.sum(), "wired_r", float(res))
    mv.info["return_probability"] = float(hit[ch.a_index(gc.zeta)])
    return mv


def tree_tunnel_escape(n: int) -> float:
    """P(reach the open end before the set) from the deepest interior tunnel state."""
    from .constructions import tree_tunnel_chain
    gc = tree_tunnel_chain(n)
    ch = gc.chain()
    if n == 2:
        return 1.0
    h, _ = ch.absorption_probabilities([1])
    return float(h[ch.t_index(n - 1), 0])


def tree_tunnel_ratio(n: int) -> float:
    """Ratio of deepest-state escape probabilities for tunnels of length n + 1 and n."""
    return tree_tunnel_escape(n + 1) / tree_tunnel_escape(n)
