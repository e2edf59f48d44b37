"""Velocity/pressure fields: reconstruction, Euler residuals and identity checks.

Axisymmetric fields live on an (r, z) grid with physical components
(u_r, u_z, u_theta).  Cartesian fields are closed-form evaluators that can
be sampled on 2-D or 3-D boxes.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline, RegularGridInterpolator
from scipy.integrate import cumulative_simpson

from .errors import ParameterError, DomainError, DataError
from .minpoint import contour_polylines, PSI_REF, BivariatePoly, PsiField
from .profiles import series_beta_gamma


# =============================================================== types

@dataclass
class AxisymField:
    r: np.ndarray
    z: np.ndarray
    u_r: np.ndarray        # [ir, iz]
    u_z: np.ndarray
    u_theta: np.ndarray
    p: np.ndarray
    mask: np.ndarray
    beta: np.ndarray | None = None     # beta(p) at each node, for swirl checks
    notes: list = field(default_factory=list)

    @property
    def spacing(self):
        return (self.r[1] - self.r[0], self.z[1] - self.z[0])

    def speed(self):
        return np.sqrt(self.u_r ** 2 + self.u_z ** 2 + self.u_theta ** 2)

    def rows(self):
        R, Z = np.meshgrid(self.r, self.z, indexing="ij")
        cols = [R, Z, self.u_r, self.u_z, self.u_theta, self.p, self.mask.astype(float)]
        return np.stack([c.ravel() for c in cols], axis=1)

    @classmethod
    def from_rows(cls, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 7:
            raise DataError("axisymmetric field needs 7 columns")
        r = np.unique(rows[:, 0])
        z = np.unique(rows[:, 1])
        if len(r) * len(z) != len(rows):
            raise DataError("rows do not form a full (r, z) grid")
        order = np.lexsort((rows[:, 1], rows[:, 0]))
        g = rows[order].reshape(len(r), len(z), 7)
        return cls(r, z, g[..., 2], g[..., 3], g[..., 4], g[..., 5], g[..., 6] > 0.5)


@dataclass
class CartesianField:
    dim: int
    velocity: callable          # X[..., dim] -> U[..., dim]
    pressure: callable          # X[..., dim] -> P[...]
    grad_pressure: callable = None
    regular_band: tuple = (-math.inf, math.inf)
    support: tuple | None = None       # (p_lo, p_hi) of the velocity support
    name: str = ""
    level_map: callable = None         # base pressure -> this field's pressure

    def level(self, p):
        return float(self.level_map(p)) if self.level_map is not None else float(p)

    def grad_p(self, X):
        if self.grad_pressure is not None:
            return self.grad_pressure(X)
        X = np.asarray(X, dtype=float)
        h = 1e-6
        out = np.empty(X.shape)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            out[..., i] = (self.pressure(X + e) - self.pressure(X - e)) / (2 * h)
        return out

    def sample(self, axes):
        """Grid sample on the box given by a list of 1-D node vectors."""
        if len(axes) != self.dim:
            raise ParameterError("one axis per dimension is required")
        mesh = np.meshgrid(*axes, indexing="ij")
        X = np.stack(mesh, axis=-1)
        return GriddedField([np.asarray(a, float) for a in axes],
                            np.moveaxis(self.velocity(X), -1, 0), self.pressure(X))


@dataclass
class GriddedField:
    axes: list
    U: np.ndarray       # [dim, n1, n2, ...]
    P: np.ndarray

    @property
    def dim(self):
        return len(self.axes)

    def rows(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        cols = list(mesh) + [u for u in self.U] + [self.P]
        return np.stack([c.ravel() for c in cols], axis=1)

    @classmethod
    def from_rows(cls, rows, dim):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2 * dim + 1:
            raise DataError(f"{dim}-D field needs {2 * dim + 1} columns")
        axes = [np.unique(rows[:, i]) for i in range(dim)]
        shape = tuple(len(a) for a in axes)
        if int(np.prod(shape)) != len(rows):
            raise DataError("rows do not form a full grid")
        order = np.lexsort(tuple(rows[:, i] for i in reversed(range(dim))))
        g = rows[order].reshape(shape + (2 * dim + 1,))
        U = np.stack([g[..., dim + i] for i in range(dim)])
        return cls(axes, U, g[..., 2 * dim])


@dataclass
class GeneratrixFamily:
    p: np.ndarray
    t: np.ndarray
    R: np.ndarray       # [ip, it]
    Z: np.ndarray


# ====================================================== reconstruction

def _hermite_eval(x0, x1, y0, y1, d0, d1, x):
    h = x1 - x0
    t = (x - x0) / h
    return ((2 * t ** 3 - 3 * t ** 2 + 1) * y0 + (t ** 3 - 2 * t ** 2 + t) * h * d0
            + (-2 * t ** 3 + 3 * t ** 2) * y1 + (t ** 3 - t ** 2) * h * d1)


def _hermite_slope(x0, x1, y0, y1, d0, d1, x):
    h = x1 - x0
    t = (x - x0) / h
    return ((6 * t ** 2 - 6 * t) * y0 + (3 * t ** 2 - 4 * t + 1) * h * d0
            + (-6 * t ** 2 + 6 * t) * y1 + (3 * t ** 2 - 2 * t) * h * d1) / h


def reconstruct(gen, profiles=None, r_nodes=None, z_nodes=None, psi_ref=PSI_REF, poly=None,
                meridian_sign=1, swirl_sign=1):
    """Velocity and pressure on an (r, z) grid.

    u_theta = sqrt(beta)/r and |(u_r, u_z)| = sqrt(1 - beta/r^2) along the
    isobar tangent.  From a generatrix grid, each z column p -> f(p, z) is
    inverted with Hermite cubics (f_p = pi is exact there).  From a psi
    field, isobars are psi level sets and beta is the series in psi.
    """
    if isinstance(gen, PsiField):
        return _reconstruct_psi(gen, psi_ref, poly, meridian_sign, swirl_sign)
    return _reconstruct_generatrix(gen, profiles, r_nodes, z_nodes, meridian_sign, swirl_sign)


def _reconstruct_generatrix(gen, profiles, r_nodes, z_nodes, msign, ssign):
    eps = gen.epsilon
    ps = gen.p
    A, B, G = gen.alpha, gen.beta, gen.gamma
    if profiles is not None and profiles.consistent:
        dB = np.array([profiles.flow(q, b, g)[0] for q, b, g in zip(ps, B, G)])
    elif profiles is not None:
        dB = np.array([profiles.dbeta(q) for q in ps])
    else:
        dB = np.gradient(B, ps)
    if z_nodes is None:
        z_nodes = gen.z
    zi = [int(round((zq - gen.z[0]) / (gen.z[1] - gen.z[0]))) for zq in z_nodes]
    if any(i < 0 or i >= len(gen.z) or abs(gen.z[i] - zq) > 1e-9 for i, zq in zip(zi, z_nodes)):
        raise ParameterError("z_nodes must be generatrix z nodes")
    z = gen.z[zi]
    if r_nodes is None:
        fin = gen.f[np.isfinite(gen.f)]
        r_nodes = np.arange(fin.min(), fin.max(), gen.z[1] - gen.z[0])
    r = np.asarray(r_nodes, dtype=float)
    shape = (len(r), len(z))
    P = np.full(shape, np.nan)
    Zt = np.full(shape, np.nan)
    Bt = np.full(shape, np.nan)
    with np.errstate(all="ignore"):
        W = eps * gen.f ** 2 + G[:, None]
        PI = 2 * eps * A[:, None] / (gen.f * W)
        PIF = -2 * eps * A[:, None] * (W + 2 * eps * gen.f ** 2) / (gen.f ** 2 * W ** 2)
        ZP = PIF * gen.fz
    for jj, j in enumerate(zi):
        fc, pc, zc, zpc = gen.f[:, j], PI[:, j], gen.fz[:, j], ZP[:, j]
        ok = np.isfinite(fc) & np.isfinite(zc)
        if ok.sum() < 2:
            continue
        # longest run of valid nodes from the start of the finite block
        idx = np.where(ok)[0]
        run = idx[np.concatenate([[True], np.diff(idx) == 1])]
        lo_i, hi_i = idx[0], idx[0] + len(run) - 1
        fr = fc[lo_i:hi_i + 1]
        if np.any(np.diff(fr) * eps <= 0):
            raise DomainError("f is not monotone in p along a z column")
        sgn = 1 if fr[-1] > fr[0] else -1
        fs = fr if sgn > 0 else fr[::-1]
        k = np.searchsorted(fs, r) - 1
        inside = (k >= 0) & (k < len(fs) - 1)
        for ir in np.where(inside)[0]:
            kk = k[ir] if sgn > 0 else len(fs) - 2 - k[ir]
            a, b = lo_i + kk, lo_i + kk + 1
            x0, x1 = ps[a], ps[b]
            # Newton on the Hermite cubic f(p) = r from the secant guess
            q = x0 + (r[ir] - fc[a]) / (fc[b] - fc[a]) * (x1 - x0)
            for _ in range(30):
                val = _hermite_eval(x0, x1, fc[a], fc[b], pc[a], pc[b], q) - r[ir]
                der = _hermite_slope(x0, x1, fc[a], fc[b], pc[a], pc[b], q)
                dq = val / der
                q -= dq
                if abs(dq) < 1e-15:
                    break
            P[ir, jj] = q
            Zt[ir, jj] = _hermite_eval(x0, x1, zc[a], zc[b], zpc[a], zpc[b], q)
            Bt[ir, jj] = _hermite_eval(x0, x1, B[a], B[b], dB[a], dB[b], q)
    R = r[:, None] * np.ones(shape)
    u_r, u_z, u_t, mask = meridian_swirl(R, Bt, Zt, np.ones(shape), np.isfinite(P), msign, ssign)
    return AxisymField(r, z, u_r, u_z, u_t, P, mask, Bt)


def meridian_swirl(R, beta, tr, tz, mask, msign=1, ssign=1):
    """(u_r, u_z, u_theta, mask) of a unit-speed flow with swirl sqrt(beta)/r.

    (tr, tz) is any tangent of the isobar in the (r, z) half-plane; nodes
    with beta < 0 or r^2 < beta are masked, r^2 = beta gives pure swirl.
    """
    with np.errstate(all="ignore"):
        n = np.hypot(tr, tz)
        mask = mask & np.isfinite(beta) & (beta >= 0) & (R * R >= beta) & (n > 0)
        m = np.sqrt(np.where(mask, 1 - beta / (R * R), np.nan))
        u_r = msign * m * tr / n
        u_z = msign * m * tz / n
        u_t = ssign * np.sqrt(np.where(mask, beta, np.nan)) / R
    return u_r, u_z, u_t, mask


def _beta_of_psi(order=16):
    bs, _ = series_beta_gamma(order)
    return bs


def _reconstruct_psi(field, psi_ref, poly, msign, ssign):
    r, z = field.r, field.z
    R, Z = np.meshgrid(r, z, indexing="ij")
    if poly is not None:
        psi = poly(R, Z)
        pr, pz = poly.gradient(R, Z)
        mask = np.ones_like(psi, dtype=bool)
    else:
        psi = np.where(field.mask, field.psi, np.nan)
        pr = np.gradient(psi, r, axis=0)
        pz = np.gradient(psi, z, axis=1)
        mask = field.mask.copy()
    bs = _beta_of_psi()
    with np.errstate(all="ignore"):
        beta = bs(psi)
        mask &= np.isfinite(psi) & (psi > 0)
        u_r, u_z, u_t, mask = meridian_swirl(R, beta, -pz, pr, mask, msign, ssign)
        p = np.log(psi / psi_ref) / 3.0
    return AxisymField(r, z, u_r, u_z, u_t, p, mask, beta)


# ===================================================== Euler residuals

def _d(a, h, axis):
    """Centered difference; NaN on the boundary layer of the axis."""
    out = np.full(a.shape, np.nan)
    sl_c = [slice(None)] * a.ndim
    sl_p = [slice(None)] * a.ndim
    sl_m = [slice(None)] * a.ndim
    sl_c[axis] = slice(1, -1)
    sl_p[axis] = slice(2, None)
    sl_m[axis] = slice(None, -2)
    out[tuple(sl_c)] = (a[tuple(sl_p)] - a[tuple(sl_m)]) / (2 * h)
    return out


def _summary(res, region=None):
    out = {}
    for name, arr in res.items():
        a = np.abs(arr)
        if region is not None:
            a = np.where(region, a, np.nan)
        fin = a[np.isfinite(a)]
        out[name] = {"max": float(fin.max()) if fin.size else math.nan,
                     "mean": float(fin.mean()) if fin.size else math.nan,
                     "count": int(fin.size)}
    return out


def euler_residuals(fld, region=None):
    """Cylindrical residual grids and their max/mean summaries.

    Only nodes whose four neighbours are masked-in get a value.
    """
    hr, hz = fld.spacing
    m = fld.mask
    nan = lambda a: np.where(m, a, np.nan)
    ur, uz, ut, p = nan(fld.u_r), nan(fld.u_z), nan(fld.u_theta), nan(fld.p)
    R = fld.r[:, None] * np.ones_like(ur)
    dr = lambda a: _d(a, hr, 0)
    dz = lambda a: _d(a, hz, 1)
    with np.errstate(all="ignore"):
        res = {
            "divergence": dr(R * ur) / R + dz(uz),
            "momentum_r": ur * dr(ur) + uz * dz(ur) - ut * ut / R + dr(p),
            "momentum_z": ur * dr(uz) + uz * dz(uz) + dz(p),
            "momentum_theta": ur * dr(ut) + uz * dz(ut) + ur * ut / R,
            "orthogonality": ur * dr(p) + uz * dz(p),
        }
    return {"grids": res, "summary": _summary(res, region)}


def cartesian_euler_residuals(g, region=None):
    """div u, the momentum components (u.grad)u_i + d_i p and u.grad p on a Cartesian grid."""
    hs = [a[1] - a[0] for a in g.axes]
    n = g.dim
    D = lambda a, i: _d(a, hs[i], i)
    res = {"divergence": sum(D(g.U[i], i) for i in range(n))}
    gp = [D(g.P, i) for i in range(n)]
    for i in range(n):
        res[f"momentum_{i + 1}"] = sum(g.U[j] * D(g.U[i], j) for j in range(n)) + gp[i]
    res["orthogonality"] = sum(g.U[i] * gp[i] for i in range(n))
    return {"grids": res, "summary": _summary(res, region)}


def refinement_slopes(maxima):
    """log2 ratios of successive maxima for a halving sequence of steps."""
    m = np.asarray(maxima, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return list(np.log2(m[:-1] / m[1:]))


def normalization_error(fld):
    s = fld.speed()
    return float(np.nanmax(np.abs(np.where(fld.mask, s - 1.0, np.nan))))


# ================================================ geometric identities

def generatrix_family(gen, t_nodes, p_index=None):
    """Arc-length parameterisation of the slices of a generatrix grid, t = 0 at z = 0."""
    z = gen.z
    j0 = int(np.argmin(np.abs(z)))
    idx = range(len(gen.p)) if p_index is None else p_index
    ps, Rs, Zs = [], [], []
    for i in idx:
        f, fz = gen.f[i], gen.fz[i]
        if not np.all(np.isfinite(f)):
            continue
        ds = np.sqrt(1 + fz * fz)
        s = cumulative_simpson(ds, x=z, initial=0.0)
        s = s - s[j0]
        zt = CubicHermiteSpline(s, z, 1 / ds)
        Zv = zt(t_nodes)
        fr = CubicHermiteSpline(z, f, fz)
        ps.append(gen.p[i])
        Rs.append(fr(Zv))
        Zs.append(Zv)
    return GeneratrixFamily(np.array(ps), np.asarray(t_nodes, float), np.array(Rs), np.array(Zs))


def _d4(a, h, axis):
    """4-point (fourth-order) centered difference; NaN on two boundary layers."""
    out = np.full(a.shape, np.nan)
    n = a.shape[axis]
    take = lambda s: np.take(a, np.arange(s, n - 4 + s), axis=axis)
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(2, -2)
    out[tuple(sl)] = (-take(4) + 8 * take(3) - 8 * take(1) + take(0)) / (12 * h)
    return out


def verify_geometry(family, profiles, j_tol=1e-10, cylinder_tol=1e-8):
    """Residuals of the three identities for an arc-length family.

    unit speed:   R_t^2 + Z_t^2 - 1
    jacobian:     sqrt(R^2 - beta) |R_p Z_t - R_t Z_p| - sqrt(alpha)
    curvature:    kappa R (R^2 - beta) + beta Z_t - R^3 sqrt(R^2 - beta) / sqrt(alpha)

    with kappa = R_t Z_tt - Z_t R_tt.  Families with R_t = 0 everywhere
    (cylinders) are reported as degenerate and not checked.
    """
    p, t, R, Z = family.p, family.t, family.R, family.Z
    hp = p[1] - p[0] if len(p) > 1 else math.nan
    ht = t[1] - t[0]
    Rt, Zt = _d4(R, ht, 1), _d4(Z, ht, 1)
    if np.nanmax(np.abs(Rt)) < cylinder_tol:
        return {"degenerate": "cylinder", "summary": {}}
    Rtt, Ztt = _d4(Rt, ht, 1), _d4(Zt, ht, 1)
    Rp, Zp = _d4(R, hp, 0), _d4(Z, hp, 0)
    a = np.array([profiles.alpha(q) for q in p])[:, None]
    b = np.array([profiles.beta(q) for q in p])[:, None]
    J = Rp * Zt - Rt * Zp
    kappa = Rt * Ztt - Zt * Rtt
    with np.errstate(invalid="ignore"):
        q = np.sqrt(R * R - b)
        res = {
            "unit_speed": Rt * Rt + Zt * Zt - 1,
            "jacobian": q * np.abs(J) - np.sqrt(a),
            "curvature": kappa * R * (R * R - b) + b * Zt - R ** 3 * q / np.sqrt(a),
        }
    irregular = np.abs(J) < j_tol
    for v in res.values():
        v[irregular] = np.nan
    return {"degenerate": None, "grids": res, "irregular": irregular, "summary": _summary(res)}


# ================================================= even/odd dim flows

def make_evendim_flow(n_half, variant="even", a=0.0, half_pressure=False):
    """u_{2j-1} = -x_{2j}, u_{2j} = x_{2j-1}; the odd variant appends u_{2n+1} = a.

    The pressure is half the squared distance from the rotation axis,
    p = (x_1^2 + ... + x_{2n}^2)/2, in both variants.  half_pressure
    keeps only x_1..x_n in the odd variant, which is not a Gavrilov flow.
    """
    if n_half < 1:
        raise ParameterError("n_half must be at least 1")
    if variant not in ("even", "odd"):
        raise ParameterError("variant is 'even' or 'odd'")
    m = 2 * n_half
    dim = m + (1 if variant == "odd" else 0)
    k = n_half if (half_pressure and variant == "odd") else m

    def velocity(X):
        X = np.asarray(X, dtype=float)
        U = np.empty(X.shape)
        U[..., 0:m:2] = -X[..., 1:m:2]
        U[..., 1:m:2] = X[..., 0:m:2]
        if dim > m:
            U[..., m] = a
        return U

    def pressure(X):
        X = np.asarray(X, dtype=float)
        return 0.5 * np.sum(X[..., :k] ** 2, axis=-1)

    def grad_pressure(X):
        X = np.asarray(X, dtype=float)
        G = np.zeros(X.shape)
        G[..., :k] = X[..., :k]
        return G

    return CartesianField(dim, velocity, pressure, grad_pressure, regular_band=(0.0, math.inf),
                          name=f"{variant}{dim}")


def trajectory(fld, x0, t_end, n=2000):
    """Integrate x' = u(x) with RK4 (fixed step)."""
    x = np.array(x0, dtype=float)
    h = t_end / n
    out = [x.copy()]
    for _ in range(n):
        k1 = fld.velocity(x)
        k2 = fld.velocity(x + h / 2 * k1)
        k3 = fld.velocity(x + h / 2 * k2)
        k4 = fld.velocity(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x.copy())
    return np.array(out)


# ========================================================= localization

def bump(s, p0, delta):
    s = np.asarray(s, dtype=float)
    x = (s - p0) / delta
    inside = np.abs(x) < 1
    out = np.zeros_like(s)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


class LocalizedPressure:
    """p~(s) = -int_s^inf phi(sigma)^2 d sigma, tabulated with Gauss-Legendre panels.

    Cubic Hermite interpolation with the exact slope phi^2 between panels.
    """

    def __init__(self, p0, delta, panels=4000, phi=None):
        self.p0, self.delta = p0, delta
        self.phi = phi or (lambda s: bump(s, p0, delta))
        nodes, weights = np.polynomial.legendre.leggauss(8)
        edges = np.linspace(p0 - delta, p0 + delta, panels + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        pts = mids[:, None] + half[:, None] * nodes[None, :]
        seg = np.sum(weights[None, :] * self.phi(pts) ** 2, axis=1) * half
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        self.total = float(tail[0])
        self.spline = CubicHermiteSpline(edges, -tail, self.phi(edges) ** 2)
        self.lo, self.hi = edges[0], edges[-1]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inner = np.clip(s, self.lo, self.hi)
        return np.where(s >= self.hi, 0.0, np.where(s <= self.lo, -self.total, self.spline(inner)))


def localize(fld, p0, delta):
    """(phi(p) u, p~(p)) with phi a smooth bump supported in (p0 - delta, p0 + delta)."""
    lo, hi = fld.regular_band
    if not (lo < p0 - delta and p0 + delta < hi):
        raise ParameterError(f"band ({p0 - delta}, {p0 + delta}) is not inside the regular range {fld.regular_band}")
    P = LocalizedPressure(p0, delta)
    phi = P.phi

    def velocity(X):
        return phi(fld.pressure(X))[..., None] * fld.velocity(X)

    def pressure(X):
        return P(fld.pressure(X))

    def grad_pressure(X):
        return (phi(fld.pressure(X)) ** 2)[..., None] * fld.grad_p(X)

    return CartesianField(fld.dim, velocity, pressure, grad_pressure,
                          regular_band=(p0 - delta, p0 + delta), support=(p0 - delta, p0 + delta),
                          name=f"localized {fld.name}",
                          level_map=lambda q: P(fld.level(q)) if fld.level_map else P(q))


def rescale(fld, phi):
    """General equivalence (phi(p) u, int phi^2 dp) with a sampled-free smooth phi and its primitive.

    `phi` is a pair (phi, Phi) where Phi' = phi^2.
    """
    f, F = phi

    def velocity(X):
        return f(fld.pressure(X))[..., None] * fld.velocity(X)

    return CartesianField(fld.dim, velocity, lambda X: F(fld.pressure(X)),
                          lambda X: (f(fld.pressure(X)) ** 2)[..., None] * fld.grad_p(X),
                          regular_band=fld.regular_band, name=f"rescaled {fld.name}")


# ============================================================ torus flow

def torus_flow(poly, psi_ref=PSI_REF, series_order=16, swirl_sign=1, meridian_sign=1):
    """3-D Cartesian evaluators of the flow built from psi(r, z) (pressure (1/3) ln(psi/psi_ref))."""
    bs, _ = series_beta_gamma(series_order)

    def parts(X):
        X = np.asarray(X, dtype=float)
        x, y, zz = X[..., 0], X[..., 1], X[..., 2]
        r = np.hypot(x, y)
        psi = poly(r, zz)
        pr, pz = poly.gradient(r, zz)
        return x, y, r, psi, pr, pz

    def velocity(X):
        x, y, r, psi, pr, pz = parts(X)
        with np.errstate(all="ignore"):
            beta = bs(psi)
            g = np.hypot(pr, pz)
            m = np.sqrt(np.clip(1 - beta / (r * r), 0, None))
            ur = meridian_sign * m * (-pz) / g
            uz = meridian_sign * m * pr / g
            ut = swirl_sign * np.sqrt(np.clip(beta, 0, None)) / r
            U = np.stack([ur * x / r - ut * y / r, ur * y / r + ut * x / r, uz], axis=-1)
        return np.nan_to_num(U)

    def pressure(X):
        _, _, _, psi, _, _ = parts(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(psi / psi_ref) / 3.0

    def grad_pressure(X):
        x, y, r, psi, pr, pz = parts(X)
        with np.errstate(all="ignore"):
            c = 1.0 / (3.0 * psi)
            return np.stack([c * pr * x / r, c * pr * y / r, c * pz], axis=-1)

    # levels below the degree-5 saddle value stay in the torus cell
    return CartesianField(3, velocity, pressure, grad_pressure,
                          regular_band=(-math.inf, math.log(0.2 / psi_ref) / 3.0), name="torus")


# ======================================================= plane sections

def plane_basis(normal):
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - np.dot(a, n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return n, e1, e2


@dataclass
class SectionResult:
    value: float
    magnitude: float          # integral of |integrand|, the natural scale
    curves: list
    empty: bool


def plane_section_integral(fld, plane, level, xi, half_width=1.6, n=201):
    """Curve integral of (xi.u)(nu.u)/|grad q| over M_p cut by a plane.

    q is the pressure restricted to the plane, nu the unit normal of the
    plane.  The curve comes from contouring q on an n x n grid of
    the square |s|, |t| <= half_width; the integral is the trapezoid rule
    along the polylines.
    """
    point, normal = plane
    point = np.asarray(point, dtype=float)
    nrm, e1, e2 = plane_basis(normal)
    xi = np.asarray(xi, dtype=float)
    if abs(np.dot(xi, nrm)) > 1e-12:
        raise ParameterError("xi must be tangent to the plane")
    s = np.linspace(-half_width, half_width, n)
    S, T = np.meshgrid(s, s, indexing="ij")
    X = point + S[..., None] * e1 + T[..., None] * e2
    q = fld.pressure(X)
    curves = contour_polylines(s, s, q, level)
    if not curves:
        return SectionResult(0.0, 0.0, [], True)
    total, mag = 0.0, 0.0
    for c in curves:
        Xc = point + c[:, :1] * e1 + c[:, 1:] * e2
        U = fld.velocity(Xc)
        Gp = fld.grad_p(Xc)
        gq = np.stack([Gp @ e1, Gp @ e2], axis=-1)
        gnorm = np.linalg.norm(gq, axis=-1)
        val = (U @ xi) * (U @ nrm) / gnorm
        ds = np.linalg.norm(np.diff(c, axis=0), axis=1)
        total += float(np.sum(0.5 * (val[1:] + val[:-1]) * ds))
        mag += float(np.sum(0.5 * (np.abs(val[1:]) + np.abs(val[:-1])) * ds))
    return SectionResult(total, mag, curves, False)


def plane_flux_integral(fld, plane, xi, half_width=1.6, n=401):
    """Integral over the plane of (xi.u)(nu.u), nu the plane normal (trapezoid rule)."""
    point, normal = plane
    nrm, e1, e2 = plane_basis(normal)
    s = np.linspace(-half_width, half_width, n)
    S, T = np.meshgrid(s, s, indexing="ij")
    X = np.asarray(point, float) + S[..., None] * e1 + T[..., None] * e2
    U = fld.velocity(X)
    val = (U @ np.asarray(xi, float)) * (U @ nrm)
    w = np.full(n, s[1] - s[0])
    w[0] = w[-1] = 0.5 * (s[1] - s[0])
    return float(w @ val @ w), float(w @ np.abs(val) @ w)


def tilted_normal(degrees, axis="x"):
    a = math.radians(degrees)
    if axis == "x":
        return np.array([0.0, -math.sin(a), math.cos(a)])
    return np.array([-math.sin(a), 0.0, math.cos(a)])


# ============================================================ audits

def _interp(fld, arr):
    vals = np.where(fld.mask, arr, np.nan)
    return RegularGridInterpolator((fld.r, fld.z), vals, bounds_error=False, fill_value=np.nan)


def isobar_polylines(fld, levels):
    out = {}
    for lv in levels:
        out[lv] = contour_polylines(fld.r, fld.z, fld.p, lv, fld.mask)
    return out


def bernoulli_audit(fld, levels, tol=1e-6, expected=1.0):
    """Per isobar: mean speed and the largest deviation of |u| from that mean."""
    speed = _interp(fld, fld.speed())
    report = []
    for lv, lines in isobar_polylines(fld, levels).items():
        if not lines:
            report.append({"level": lv, "points": 0})
            continue
        pts = np.concatenate(lines)
        s = speed(pts)
        s = s[np.isfinite(s)]
        if s.size == 0:
            report.append({"level": lv, "points": 0})
            continue
        mean = float(s.mean())
        dev = float(np.max(np.abs(s - mean)))
        report.append({"level": lv, "points": int(s.size), "mean": mean, "max_dev": dev,
                       "flag": bool(dev > tol or (expected is not None and abs(mean - expected) > tol))})
    return report


def swirl_audit(fld, levels, beta_of_p):
    """max |r u_theta - sqrt(beta(p))| along each isobar."""
    ut = _interp(fld, fld.u_theta)
    out = []
    for lv, lines in isobar_polylines(fld, levels).items():
        if not lines:
            continue
        pts = np.concatenate(lines)
        v = pts[:, 0] * ut(pts)
        v = v[np.isfinite(v)]
        if v.size:
            out.append({"level": lv, "max_dev": float(np.max(np.abs(v - math.sqrt(beta_of_p(lv)))))})
    return out
