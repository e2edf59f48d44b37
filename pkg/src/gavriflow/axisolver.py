"""Generatrix graph r = f(p, z) of an axisymmetric flow.

The spine f(p, 0) is marched in p with pi = 2 eps alpha / (f (eps f^2 + gamma))
while beta, gamma are co-integrated; each p-slice is then marched in z with
the second-order equation

    f'' = beta (1 + f'^2) / (f (f^2 - beta)) - eps f^2 (1 + f'^2)^(3/2) / (sqrt(alpha) sqrt(f^2 - beta))

started from the closure slope.  Symmetry stations (f_z = 0, f_zz != 0)
give reflections and hence a z-periodic extension.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .consistency import closure, values_at, is_admissible, _FG
from .errors import ParameterError, ExtensionError, InadmissiblePointError, DomainError
from .profiles import ProfileTriple, integrate_profiles
from .scenario import FlowScenario

ZETA_TOL = 1e-9


@dataclass
class GeneratrixGrid:
    p: np.ndarray
    z: np.ndarray
    f: np.ndarray            # [ip, iz]
    fp: np.ndarray
    fz: np.ndarray
    fzz: np.ndarray
    residF: np.ndarray
    residG: np.ndarray
    admissible: np.ndarray
    alpha: np.ndarray        # per p node
    beta: np.ndarray
    gamma: np.ndarray
    epsilon: int = 1
    degenerate: bool = False
    notes: list = field(default_factory=list)

    @property
    def shape(self):
        return self.f.shape

    def rows(self):
        P, Z = np.meshgrid(self.p, self.z, indexing="ij")
        cols = [P, Z, self.f, self.fp, self.fz, self.residF, self.residG, self.admissible.astype(float)]
        return np.stack([c.ravel() for c in cols], axis=1)

    def max_residual(self, interior=0):
        sl = (slice(interior, self.f.shape[0] - interior or None),
              slice(interior, self.f.shape[1] - interior or None))
        m = self.admissible[sl] & np.isfinite(self.residF[sl]) & np.isfinite(self.residG[sl])
        if not m.any():
            return math.nan
        return float(max(np.abs(self.residF[sl][m]).max(), np.abs(self.residG[sl][m]).max()))


@dataclass
class Station:
    z0: float
    p_lo: float
    p_hi: float
    kind: str                 # "max" or "min" of f along z
    spread: float             # max deviation of z0 across slices
    fzz_min: float
    per_slice: list = field(default_factory=list)


@dataclass
class SymmetryReport:
    stations: list
    period: float | None
    p_c: float | None = None
    degenerate_slices: list = field(default_factory=list)
    vertical: bool = True

    @property
    def z0_values(self):
        return [s.z0 for s in self.stations]


# --------------------------------------------------------------- marching

def z_rhs(f, zeta, alpha, beta, eps):
    s = 1.0 + zeta * zeta
    q = f * f - beta
    return beta * s / (f * q) - eps * f * f * s ** 1.5 / (np.sqrt(alpha) * np.sqrt(q))


def _pi(f, alpha, gamma, eps):
    return 2.0 * eps * alpha / (f * (eps * f * f + gamma))


def _pi_f(f, alpha, gamma, eps):
    w = eps * f * f + gamma
    return -2.0 * eps * alpha * (w + 2.0 * eps * f * f) / (f * f * w * w)


def march_spine(profiles, p_start, f_start, p_targets, beta_start=None, gamma_start=None,
                zeta_start=None):
    """RK4 march of (beta, gamma, f) in p through the sorted target nodes.

    `f_start` may be an array (one column per z node).  With `zeta_start`
    the slope f_z is carried along too: zeta_p = (d pi / d f) zeta.
    Returns arrays (beta, gamma, f, zeta) at the targets, NaN once
    admissibility is lost.
    """
    eps = profiles.epsilon
    b = profiles.beta(p_start) if beta_start is None else beta_start
    g = profiles.gamma(p_start) if gamma_start is None else gamma_start
    f = np.array(f_start, dtype=float)
    zt = np.zeros_like(f) if zeta_start is None else np.array(zeta_start, dtype=float)
    p = p_start
    out_b, out_g, out_f, out_z = [], [], [], []

    def rhs(q, y):
        b_, g_, f_, z_ = y
        db, dg = profiles.flow(q, b_, g_)
        a = profiles.alpha(q)
        return (db, dg, _pi(f_, a, g_, eps), _pi_f(f_, a, g_, eps) * z_)

    def axpy(y, h, k):
        return tuple(u + h * v for u, v in zip(y, k))

    with np.errstate(all="ignore"):
        for q in p_targets:
            h = q - p
            if h != 0.0:
                y = (b, g, f, zt)
                try:
                    k1 = rhs(p, y)
                    k2 = rhs(p + h / 2, axpy(y, h / 2, k1))
                    k3 = rhs(p + h / 2, axpy(y, h / 2, k2))
                    k4 = rhs(p + h, axpy(y, h, k3))
                    b, g, f, zt = (u + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
                                   for u, a1, a2, a3, a4 in zip(y, k1, k2, k3, k4))
                except ArithmeticError:
                    b = g = math.nan
                    f = np.full_like(f, math.nan)
                p = q
            w = eps * f * f + g
            bad = ~((f * f > b) & (w > 0) & np.isfinite(f))
            f = np.where(bad, np.nan, f)
            zt = np.where(bad, np.nan, zt)
            out_b.append(b)
            out_g.append(g)
            out_f.append(f.copy())
            out_z.append(zt.copy())
    return (np.array(out_b, dtype=float), np.array(out_g, dtype=float),
            np.array(out_f), np.array(out_z))


def march_z(f0, zeta0, alpha, beta, eps, z_targets):
    """RK4 march of (f, zeta) in z, vectorised over independent slices.

    Slices that leave f^2 > beta are frozen as NaN from that node on.
    """
    f = np.array(f0, dtype=float)
    zt = np.array(zeta0, dtype=float)
    z = 0.0 if len(z_targets) == 0 else 0.0
    fs, zs = [], []
    with np.errstate(all="ignore"):
        for q in z_targets:
            h = q - z
            if h != 0.0:
                k1f, k1z = zt, z_rhs(f, zt, alpha, beta, eps)
                k2f = zt + h / 2 * k1z
                k2z = z_rhs(f + h / 2 * k1f, k2f, alpha, beta, eps)
                k3f = zt + h / 2 * k2z
                k3z = z_rhs(f + h / 2 * k2f, k3f, alpha, beta, eps)
                k4f = zt + h * k3z
                k4z = z_rhs(f + h * k3f, k4f, alpha, beta, eps)
                f = f + h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f)
                zt = zt + h / 6 * (k1z + 2 * k2z + 2 * k3z + k4z)
                z = q
            bad = ~(np.isfinite(f) & np.isfinite(zt) & (f * f > beta))
            f = np.where(bad, np.nan, f)
            zt = np.where(bad, np.nan, zt)
            fs.append(f.copy())
            zs.append(zt.copy())
    return np.array(fs), np.array(zs)


def _split(nodes, origin):
    """Indices of nodes >= origin (ascending) and < origin (descending)."""
    up = np.where(nodes >= origin - 1e-12)[0]
    down = np.where(nodes < origin - 1e-12)[0][::-1]
    return up, down


def _is_z_independent(alpha, beta, gamma, f, eps, tol=1e-9):
    w = eps * f * f + gamma
    zeta_sq = 4 * alpha * (f * f - beta) / (f * f * w * w) - 1
    return bool(np.all(np.abs(zeta_sq[np.isfinite(zeta_sq)]) < tol))


def _spine(scenario, profiles, p_nodes):
    up, down = _split(p_nodes, scenario.p0)
    n = len(p_nodes)
    B, Gm, Fs = np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan)
    for idx in (up, down):
        if len(idx) == 0:
            continue
        b, g, f, _ = march_spine(profiles, scenario.p0, scenario.f0, p_nodes[idx],
                                 beta_start=scenario.beta0, gamma_start=scenario.gamma0)
        B[idx], Gm[idx], Fs[idx] = b, g, f
    return B, Gm, Fs


def _check_start(scenario, profiles):
    pv = values_at(profiles, scenario.p0)
    pv = pv._replace(beta=scenario.beta0, gamma=scenario.gamma0)
    if not (scenario.f0 > 0 and scenario.f0 ** 2 > pv.beta):
        raise ParameterError("f0 must exceed sqrt(beta0)")
    w = pv.epsilon * scenario.f0 ** 2 + pv.gamma
    upper = 2 * math.sqrt(pv.alpha * (scenario.f0 ** 2 - pv.beta)) / scenario.f0
    if not (0 < w <= upper * (1 + 1e-12)):
        raise ParameterError(f"eps*f0^2+gamma0={w:.6g} outside (0, {upper:.6g}]")


def _p_nodes_in(scenario, profiles):
    ps = scenario.p_nodes()
    lo, hi = profiles.valid_interval
    keep = [(lo < q < hi) or q == scenario.p0 for q in ps]
    return ps[np.array(keep, dtype=bool)]


def solve_f(scenario, profiles=None, order="p-then-z"):
    """Solve for f on the scenario's (p, z) grid.

    order "p-then-z": spine along z=0 in p, then every slice in z.
    order "z-then-p": the p0 slice in z, then every z column in p.
    """
    if profiles is None:
        profiles = integrate_profiles(scenario, (scenario.p_min - 1.0, scenario.p_max + 1.0),
                                      scenario.p_step)
    _check_start(scenario, profiles)
    eps = profiles.epsilon
    ps = _p_nodes_in(scenario, profiles)
    notes = []
    if len(ps) < len(scenario.p_nodes()):
        notes.append(f"p-range truncated to the profile interval {profiles.valid_interval}")
    zs = scenario.z_nodes()
    alpha = np.array([profiles.alpha(q) for q in ps], dtype=float)
    B, Gm, Fs = _spine(scenario, profiles, ps)

    if _is_z_independent(alpha, B, Gm, Fs, eps):
        F = np.repeat(Fs[:, None], len(zs), axis=1)
        zero = np.where(np.isfinite(F), 0.0, np.nan)
        notes.append("z-independent solution: slices are not marched")
        return _finish(ps, zs, F, zero, zero.copy(), alpha, B, Gm, eps, degenerate=True, notes=notes)

    zeta_sign = scenario.zeta_sign
    if order == "p-then-z":
        pv_closure = [closure_or_nan(f, a, b, g, eps) for f, a, b, g in zip(Fs, alpha, B, Gm)]
        zeta0 = zeta_sign * np.sqrt(np.array([c[1] for c in pv_closure]))
        F = np.full((len(ps), len(zs)), np.nan)
        Zt = np.full_like(F, np.nan)
        up, down = _split(zs, 0.0)
        for idx in (up, down):
            if len(idx) == 0:
                continue
            fz, zt = march_z(Fs, zeta0, alpha, B, eps, zs[idx])
            F[:, idx] = fz.T
            Zt[:, idx] = zt.T
    elif order == "z-then-p":
        i0 = int(np.argmin(np.abs(ps - scenario.p0)))
        _, zsq0 = closure_or_nan(scenario.f0, profiles.alpha(scenario.p0), scenario.beta0, scenario.gamma0, eps)
        f_row = np.full(len(zs), np.nan)
        z_row = np.full(len(zs), np.nan)
        up, down = _split(zs, 0.0)
        for idx in (up, down):
            if len(idx) == 0:
                continue
            fz, zt = march_z(np.array([scenario.f0]), np.array([zeta_sign * math.sqrt(zsq0)]),
                             alpha[i0], B[i0], eps, zs[idx])
            f_row[idx] = fz[:, 0]
            z_row[idx] = zt[:, 0]
        F = np.full((len(ps), len(zs)), np.nan)
        Zt = np.full_like(F, np.nan)
        pu, pd = _split(ps, scenario.p0)
        for idx in (pu, pd):
            if len(idx) == 0:
                continue
            _, _, fcols, zcols = march_spine(profiles, scenario.p0, f_row, ps[idx],
                                             beta_start=scenario.beta0, gamma_start=scenario.gamma0,
                                             zeta_start=z_row)
            F[idx, :] = fcols
            Zt[idx, :] = zcols
    else:
        raise ParameterError(f"unknown march order {order!r}")
    return _finish(ps, zs, F, Zt, None, alpha, B, Gm, eps, notes=notes)


def closure_or_nan(f, a, b, g, eps):
    try:
        from .profiles import ProfileValues
        return closure(f, ProfileValues(a, b, g, 0.0, 0.0, 0.0, eps))
    except (InadmissiblePointError, DomainError, ValueError):
        return math.nan, math.nan


def _fd_p(F, ps):
    """4th-order differences along p (one-sided at the ends); 2nd order on short grids."""
    n = F.shape[0]
    if n < 2:
        return np.full_like(F, np.nan)
    h = ps[1] - ps[0]
    if n < 5:
        return np.gradient(F, ps, axis=0)
    D = np.empty_like(F)
    D[2:-2] = (-F[4:] + 8 * F[3:-1] - 8 * F[1:-3] + F[:-4]) / (12 * h)
    D[0] = (-25 * F[0] + 48 * F[1] - 36 * F[2] + 16 * F[3] - 3 * F[4]) / (12 * h)
    D[1] = (-3 * F[0] - 10 * F[1] + 18 * F[2] - 6 * F[3] + F[4]) / (12 * h)
    D[-1] = (25 * F[-1] - 48 * F[-2] + 36 * F[-3] - 16 * F[-4] + 3 * F[-5]) / (12 * h)
    D[-2] = (3 * F[-1] + 10 * F[-2] - 18 * F[-3] + 6 * F[-4] - F[-5]) / (12 * h)
    return D


def _finish(ps, zs, F, Zt, Fzz, alpha, B, Gm, eps, degenerate=False, notes=None):
    A = alpha[:, None]
    Bb = B[:, None]
    Gg = Gm[:, None]
    with np.errstate(all="ignore"):
        fp = _fd_p(F, ps)
        if Fzz is None:
            Fzz = z_rhs(F, Zt, A, Bb, eps)
        f2 = F * F
        w = eps * f2 + Gg
        upper = 2 * np.sqrt(A * (f2 - Bb)) / F
        admissible = np.isfinite(F) & (f2 > Bb) & (w > 0) & (w <= upper * (1 + 1e-6))
        s = Zt * Zt + 1
        residF = (f2 - Bb) * fp * fp - A * s
        residG = f2 * w * w * s - 4 * A * (f2 - Bb)
    return GeneratrixGrid(p=ps, z=zs, f=F, fp=fp, fz=Zt, fzz=Fzz, residF=residF, residG=residG,
                          admissible=admissible, alpha=alpha, beta=B, gamma=Gm, epsilon=eps,
                          degenerate=degenerate, notes=list(notes or []))


# ------------------------------------------------------------- symmetry

def curvature_threshold(f):
    return 1e-3 * (1.0 + abs(f))


def _hermite(z0, z1, f0, f1, d0, d1, z):
    h = z1 - z0
    t = (z - z0) / h
    h00 = 2 * t ** 3 - 3 * t ** 2 + 1
    h10 = t ** 3 - 2 * t ** 2 + t
    h01 = -2 * t ** 3 + 3 * t ** 2
    h11 = t ** 3 - t ** 2
    return h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1


def slice_roots(z, fz, fzz):
    """Roots of f_z along one slice from sign changes, refined on the Hermite cubic of f_z."""
    roots = []
    ok = np.isfinite(fz) & np.isfinite(fzz)
    for i in range(len(z) - 1):
        if not (ok[i] and ok[i + 1]):
            continue
        a, b = fz[i], fz[i + 1]
        if a == 0.0:
            roots.append(float(z[i]))
            continue
        if a * b < 0:
            fn = lambda q: _hermite(z[i], z[i + 1], a, b, fzz[i], fzz[i + 1], q)
            roots.append(brentq(fn, z[i], z[i + 1], xtol=1e-14))
    return roots


def detect_symmetry(grid, tol=None):
    """Symmetry stations of every p-slice, grouped into p-independent vertical lines."""
    if grid.f.shape[1] < 5:
        raise ParameterError("need at least 5 z samples per slice")
    z = grid.z
    h = z[1] - z[0]
    tol = tol if tol is not None else 10 * h
    raw = []          # (p, z0, fzz, f)
    degenerate = []
    for i, p in enumerate(grid.p):
        fz, fzz = grid.fz[i], grid.fzz[i]
        good = np.isfinite(fz)
        if good.sum() < 5:
            continue
        if np.all(np.abs(fz[good]) <= ZETA_TOL) or grid.degenerate:
            degenerate.append(float(p))
            continue
        for z0 in slice_roots(z, fz, fzz):
            j = min(int((z0 - z[0]) / h), len(z) - 2)
            f0 = _hermite(z[j], z[j + 1], grid.f[i, j], grid.f[i, j + 1], fz[j], fz[j + 1], z0)
            curv = float(fzz[j] + (fzz[j + 1] - fzz[j]) * (z0 - z[j]) / h)
            if abs(curv) >= curvature_threshold(f0):
                raw.append((float(p), z0, curv, f0))
    stations = []
    for p, z0, curv, f0 in sorted(raw, key=lambda t: t[1]):
        for st in stations:
            if abs(st.per_slice[0][1] - z0) <= tol:
                st.per_slice.append((p, z0, curv, f0))
                break
        else:
            stations.append(Station(z0, p, p, "max" if curv < 0 else "min", 0.0, abs(curv),
                                    [(p, z0, curv, f0)]))
    vertical = True
    for st in stations:
        zz = np.array([t[1] for t in st.per_slice])
        st.z0 = float(np.median(zz))
        st.spread = float(np.max(np.abs(zz - st.z0)))
        st.p_lo = min(t[0] for t in st.per_slice)
        st.p_hi = max(t[0] for t in st.per_slice)
        st.fzz_min = min(abs(t[2]) for t in st.per_slice)
        st.per_slice.sort()
        vertical &= st.spread <= tol
    stations.sort(key=lambda s: s.z0)
    return SymmetryReport(stations, station_period(stations), None, degenerate, vertical)


def station_period(stations):
    """Translation period generated by reflections in two stations.

    Reflections in z0 and z0' compose to a shift by 2|z0 - z0'|; when both
    stations are of the same kind (two maxima of f, say) the shift by
    |z0 - z0'| is already a symmetry.
    """
    if len(stations) < 2:
        return None
    a, b = stations[0], stations[1]
    d = abs(b.z0 - a.z0)
    return d if a.kind == b.kind else 2 * d


def _overlap(a, b):
    return max(a.p_lo, b.p_lo) <= min(a.p_hi, b.p_hi)


def _interp_slice(z, f, fz, q):
    """Cubic Hermite value and slope of one slice at points q."""
    q = np.asarray(q, dtype=float)
    h = z[1] - z[0]
    j = np.clip(((q - z[0]) / h).astype(int), 0, len(z) - 2)
    t = (q - z[j]) / h
    f0, f1, d0, d1 = f[j], f[j + 1], fz[j], fz[j + 1]
    val = ((2 * t ** 3 - 3 * t ** 2 + 1) * f0 + (t ** 3 - 2 * t ** 2 + t) * h * d0
           + (-2 * t ** 3 + 3 * t ** 2) * f1 + (t ** 3 - t ** 2) * h * d1)
    der = ((6 * t ** 2 - 6 * t) * f0 + (3 * t ** 2 - 4 * t + 1) * h * d0
           + (-6 * t ** 2 + 6 * t) * f1 + (3 * t ** 2 - 2 * t) * h * d1) / h
    return val, der


def extend_periodic(grid, report, copies=2):
    """Reflect the fundamental piece between two stations into `copies` periods.

    The new z nodes are z0 + k h (k = -K..K) around the first station, so
    the mirror image in z0 is exact; values come from Hermite interpolation.
    """
    st = report.stations
    if len(st) < 2:
        raise ExtensionError("need at least two symmetry stations")
    a, b = st[0], st[1]
    if not _overlap(a, b):
        raise ExtensionError("station p-intervals are disjoint")
    z0, z1 = a.z0, b.z0
    d = z1 - z0
    period = station_period([a, b])
    h = grid.z[1] - grid.z[0]
    K = int(math.ceil(copies * period / 2 / h))
    k = np.arange(0, K + 1)
    zq = z0 + k * h
    # fold onto [0, d]: distance along the reflection group orbit
    s = np.mod(k * h, 2 * d)
    sign = np.where(s <= d, 1.0, -1.0)
    s = np.where(s <= d, s, 2 * d - s)
    if a.kind == b.kind:
        # same kind: translation by d, no reflection in between
        s = np.mod(k * h, d)
        sign = np.ones_like(s)
    pmask = (grid.p >= max(a.p_lo, b.p_lo) - 1e-12) & (grid.p <= min(a.p_hi, b.p_hi) + 1e-12)
    ps = grid.p[pmask]
    half = np.empty((len(ps), K + 1))
    half_z = np.empty_like(half)
    half_p = np.empty_like(half)
    for n, i in enumerate(np.where(pmask)[0]):
        v, dv = _interp_slice(grid.z, grid.f[i], grid.fz[i], z0 + s)
        vp, _ = _interp_slice(grid.z, grid.fp[i], np.gradient(grid.fp[i], grid.z), z0 + s)
        half[n], half_z[n], half_p[n] = v, sign * dv, vp
    full_z = np.concatenate([2 * z0 - zq[:0:-1], zq])
    F = np.concatenate([half[:, :0:-1], half], axis=1)
    Fz = np.concatenate([-half_z[:, :0:-1], half_z], axis=1)
    Fp = np.concatenate([half_p[:, :0:-1], half_p], axis=1)
    eps = grid.epsilon
    A, B, G = grid.alpha[pmask], grid.beta[pmask], grid.gamma[pmask]
    out = _finish(ps, full_z, F, Fz, None, A, B, G, eps, notes=list(grid.notes))
    with np.errstate(all="ignore"):
        s2 = Fz * Fz + 1
        out.fp = Fp
        out.residF = (F * F - B[:, None]) * Fp * Fp - A[:, None] * s2
    out.notes.append(f"periodic extension about z0={z0:.6f}, period {period:.6f}")
    out.period = period
    out.period_rule = abs(z1 - z0) if _same_p(a, b) else 2 * abs(z1 - z0)
    return out


def _same_p(a, b):
    return abs(a.p_lo - b.p_lo) < 1e-12 and abs(a.p_hi - b.p_hi) < 1e-12


# ------------------------------------------------------------------ p_c

def station_curvature(scenario, profiles, p, z_max=None, step=None):
    """(z0, f_zz, f) at the first symmetry station above z=0 on the slice p.

    Returns None when the slice has no station and (0, 0, f) for a
    z-independent flow.
    """
    step = step or scenario.z_step
    z_max = z_max or scenario.z_max
    eps = profiles.epsilon
    n = int(round(abs(p - scenario.p0) / scenario.p_step))
    targets = scenario.p0 + np.sign(p - scenario.p0) * scenario.p_step * np.arange(1, n + 1)
    targets = np.append(targets, p) if n == 0 or targets[-1] != p else targets
    b, g, f, _ = march_spine(profiles, scenario.p0, scenario.f0, targets,
                             beta_start=scenario.beta0, gamma_start=scenario.gamma0)
    b, g, f = b[-1], g[-1], float(f[-1])
    a = profiles.alpha(p)
    if not np.isfinite(f):
        return None
    if _is_z_independent(np.array([a]), np.array([b]), np.array([g]), np.array([f]), eps):
        return 0.0, 0.0, f
    _, zsq = closure_or_nan(f, a, b, g, eps)
    zs = np.arange(1, int(z_max / step) + 1) * step
    fz_, zt_ = march_z(np.array([f]), np.array([scenario.zeta_sign * math.sqrt(zsq)]), a, b, eps, zs)
    zz = np.concatenate([[0.0], zs])
    ff = np.concatenate([[f], fz_[:, 0]])
    tt = np.concatenate([[scenario.zeta_sign * math.sqrt(zsq)], zt_[:, 0]])
    cc = z_rhs(ff, tt, a, b, eps)
    roots = slice_roots(zz, tt, cc)
    if not roots:
        return None
    z0 = roots[0]
    j = min(int(z0 / step), len(zz) - 2)
    f0 = _hermite(zz[j], zz[j + 1], ff[j], ff[j + 1], tt[j], tt[j + 1], z0)
    return z0, float(z_rhs(f0, 0.0, a, b, eps)), f0


def find_pc(scenario, profiles, p_search=(0.0, 2.0), scan=0.02, resolution=1e-3):
    """Smallest p where the station curvature drops below 1e-3 (1 + |f|).

    Scans p_search in steps of `scan`, then bisects to `resolution`.
    Returns None when the stations stay nondegenerate.
    """
    lo, hi = p_search

    def degenerate(p):
        r = station_curvature(scenario, profiles, p)
        if r is None:
            return True
        z0, fzz, f0 = r
        return abs(fzz) < curvature_threshold(f0)

    if degenerate(lo):
        return float(lo)
    grid = np.arange(lo, hi + 1e-12, scan)
    prev = lo
    for p in grid[1:]:
        if not profiles.contains(p):
            break
        if degenerate(p):
            a, b = prev, p
            while b - a > resolution:
                m = 0.5 * (a + b)
                if degenerate(m):
                    b = m
                else:
                    a = m
            return 0.5 * (a + b)
        prev = p
    return None
