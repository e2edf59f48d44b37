"""Flow near a nondegenerate pressure minimum in (r, z) variables.

With alpha = psi the pair

    2 psi_r = 3 r (r^2 + gamma(psi))
    psi_z^2 - 9 (r^2 - beta(psi)) psi + (9/4) r^2 (r^2 + gamma(psi))^2 = 0

has a solution with a minimum psi(1, 0) = 0.  Its Taylor polynomial at
(1, 0) is computed in exact rationals, the field is marched in r from the
column r = 1, and p = (1/3) ln(psi / psi_ref).
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P2
from skimage import measure

from .errors import DataError, ParameterError
from .profiles import series_beta_gamma

PSI_REF = 0.04
SERIES_RADIUS = 2.0


# ------------------------------------------------ polynomial arithmetic
# polynomials are dicts {(j, k): Fraction} for sum c_jk x^j z^k, x = r - 1

def _mul(A, B, N):
    C = {}
    for (i, j), a in A.items():
        for (k, l), b in B.items():
            if i + j + k + l <= N:
                key = (i + k, j + l)
                C[key] = C.get(key, 0) + a * b
    return {k: v for k, v in C.items() if v != 0}


def _add(*polys):
    C = {}
    for A in polys:
        for k, v in A.items():
            C[k] = C.get(k, 0) + v
    return {k: v for k, v in C.items() if v != 0}


def _scale(A, s):
    return {k: v * s for k, v in A.items() if v * s != 0}


def _compose(coefs, P, N):
    """sum_k coefs[k] P^k truncated at total degree N (P has no constant term)."""
    out = {}
    power = {(0, 0): Fraction(1)}
    for k, c in enumerate(coefs):
        if k > 0:
            power = _mul(power, P, N)
        if not power:
            break
        out = _add(out, _scale(power, c))
    return out


def _dx(A):
    return {(i - 1, j): v * i for (i, j), v in A.items() if i > 0}


def _dz(A):
    return {(i, j - 1): v * j for (i, j), v in A.items() if j > 0}


def _trunc(A, N):
    return {k: v for k, v in A.items() if k[0] + k[1] <= N}


def _residuals(psi, N, bs, gs):
    """Both equations with psi substituted, truncated (first to N-1, second to N)."""
    r = {(0, 0): Fraction(1), (1, 0): Fraction(1)}
    r2 = _mul(r, r, N + 2)
    b = _compose(bs, psi, N)
    g = _compose(gs, psi, N)
    rg = _add(r2, g)
    e1 = _add(_scale(_dx(psi), 2), _scale(_mul(r, rg, N), -3))
    pz = _dz(psi)
    e2 = _add(_mul(pz, pz, N),
              _scale(_mul(_add(r2, _scale(b, -1)), psi, N), -9),
              _scale(_mul(r2, _mul(rg, rg, N), N), Fraction(9, 4)))
    return _trunc(e1, N - 1), _trunc(e2, N)


@dataclass
class BivariatePoly:
    coeffs: dict          # {(j, k): Fraction} in (r - 1)^j z^k
    degree: int
    center: tuple = (1.0, 0.0)

    def coefficient(self, j, k):
        return self.coeffs.get((j, k), Fraction(0))

    def truncated(self, degree):
        return BivariatePoly(_trunc(self.coeffs, degree), degree, self.center)

    def _float_terms(self):
        return [(j, k, float(c)) for (j, k), c in sorted(self.coeffs.items())]

    def _matrix(self):
        m = getattr(self, "_cmat", None)
        if m is None:
            m = np.zeros((self.degree + 1, self.degree + 1))
            for j, k, c in self._float_terms():
                m[j, k] = c
            object.__setattr__(self, "_cmat", m)
        return m

    def _shift(self, r, z):
        x = np.asarray(r, dtype=float) - self.center[0]
        zz = np.asarray(z, dtype=float) - self.center[1]
        return np.broadcast_arrays(x, zz)

    def __call__(self, r, z):
        x, zz = self._shift(r, z)
        out = P2.polyval2d(x, zz, self._matrix())
        return out if np.ndim(out) else float(out)

    def gradient(self, r, z):
        x, zz = self._shift(r, z)
        m = self._matrix()
        gr = P2.polyval2d(x, zz, P2.polyder(m, axis=0))
        gz = P2.polyval2d(x, zz, P2.polyder(m, axis=1))
        return gr, gz

    def hessian(self, r, z):
        x = float(r) - self.center[0]
        zz = float(z) - self.center[1]
        H = np.zeros((2, 2))
        for j, k, c in self._float_terms():
            if j > 1:
                H[0, 0] += c * j * (j - 1) * x ** (j - 2) * zz ** k
            if j and k:
                H[0, 1] += c * j * k * x ** (j - 1) * zz ** (k - 1)
            if k > 1:
                H[1, 1] += c * k * (k - 1) * x ** j * zz ** (k - 2)
        H[1, 0] = H[0, 1]
        return H

    def residuals(self, degree=None):
        """Formal residuals of both equations (dicts, empty when exact)."""
        n = degree or self.degree
        bs, gs = series_beta_gamma(n // 2 + 1)
        return _residuals(_trunc(self.coeffs, n), n, bs.coefficients, gs.coefficients)

    def to_json(self):
        return [{"j": j, "k": k, "c": f"{c.numerator}/{c.denominator}"}
                for (j, k), c in sorted(self.coeffs.items(), key=lambda t: (sum(t[0]), -t[0][0]))]


def psi_taylor(order):
    """Exact Taylor polynomial of psi at (1, 0) through total degree `order`.

    Degree by degree, the second equation is diagonal in the new
    coefficients: c_jk enters with factor 6k - 6 (from 2 * 3z * k c z^(k-1)
    and -9 * (2/3) c).  Odd k stay zero; the first equation is a checksum.
    """
    if order < 2:
        raise ParameterError("order must be at least 2")
    bs, gs = series_beta_gamma(order // 2 + 1)
    b, g = bs.coefficients, gs.coefficients
    psi = {(2, 0): Fraction(3, 2), (0, 2): Fraction(3, 2)}
    for n in range(3, order + 1):
        _, base = _residuals(psi, n, b, g)
        for j in range(n + 1):
            k = n - j
            if k % 2:
                continue
            c = -base.get((j, k), Fraction(0)) / (6 * k - 6)
            if c:
                psi[(j, k)] = c
    poly = BivariatePoly(psi, order)
    e1, e2 = _residuals(psi, order, b, g)
    if e1 or e2:
        raise ArithmeticError("Taylor recurrence failed its checksum")
    return poly


# --------------------------------------------------------------- fields

@dataclass
class PsiField:
    r: np.ndarray
    z: np.ndarray
    psi: np.ndarray                 # [ir, iz]
    mask: np.ndarray                # True where valid
    resid2: np.ndarray | None = None
    polylines: dict = field(default_factory=dict)
    source: str = "poly"

    def rows(self, psi_ref=PSI_REF):
        R, Z = np.meshgrid(self.r, self.z, indexing="ij")
        p, _ = pressure_from_psi(self, psi_ref, strict=False)
        res = self.resid2 if self.resid2 is not None else np.full_like(self.psi, np.nan)
        cols = [R, Z, np.where(self.mask, self.psi, np.nan), p, res]
        return np.stack([c.ravel() for c in cols], axis=1)


def psi_grid(poly, window=(0.05, 1.95, -1.2, 1.2), n=(381, 481)):
    """Sample the polynomial itself on a rectangle (the truncated field)."""
    r = np.linspace(window[0], window[1], n[0])
    z = np.linspace(window[2], window[3], n[1])
    R, Z = np.meshgrid(r, z, indexing="ij")
    psi = poly(R, Z)
    return PsiField(r, z, psi, np.ones(R.shape, dtype=bool), poly_residual(poly, R, Z),
                    source=f"poly{poly.degree}")


def poly_residual(poly, R, Z, series_order=16):
    """Residual of the second psi equation with exact polynomial derivatives."""
    bs, gs = _series_floats(series_order)
    psi = poly(R, Z)
    _, pz = poly.gradient(R, Z)
    return pz ** 2 - 9 * (R * R - bs(psi)) * psi + 2.25 * R * R * (R * R + gs(psi)) ** 2


def _series_floats(order):
    bs, gs = series_beta_gamma(order)
    return bs, gs


def psi_march(poly, grid, seed_radius=1.0, series_order=16):
    """March psi along r from the seed column r = 1 on every z-row.

    grid = (r_min, r_max, z_min, z_max, h); r = 1 must be a node.  Rows with
    |z| > seed_radius are not seeded.  Nodes where psi leaves the trusted
    series radius are masked, as is everything beyond them on that row.
    """
    r_min, r_max, z_min, z_max, h = grid
    if not (r_min <= 1.0 <= r_max):
        raise ParameterError("the seed column r = 1 must lie in the grid")
    if series_order < 12:
        raise ParameterError("series order must be at least 12")
    i_lo = int(math.floor((1.0 - r_min) / h + 1e-9))
    i_hi = int(math.floor((r_max - 1.0) / h + 1e-9))
    r = 1.0 + h * np.arange(-i_lo, i_hi + 1)
    nz = int(math.floor((z_max - z_min) / h + 1e-9)) + 1
    z = z_min + h * np.arange(nz)
    bs, gs = _series_floats(series_order)
    seeded = np.abs(z) <= seed_radius + 1e-12
    psi = np.full((len(r), len(z)), np.nan)
    psi[i_lo] = np.where(seeded, poly(1.0, z), np.nan)

    def rhs(rr, y):
        return 1.5 * rr * (rr * rr + gs(y))

    for direction in (1, -1):
        y = psi[i_lo].copy()
        idx = range(i_lo + 1, len(r)) if direction > 0 else range(i_lo - 1, -1, -1)
        rr = 1.0
        hs = direction * h
        with np.errstate(all="ignore"):
            for i in idx:
                k1 = rhs(rr, y)
                k2 = rhs(rr + hs / 2, y + hs / 2 * k1)
                k3 = rhs(rr + hs / 2, y + hs / 2 * k2)
                k4 = rhs(rr + hs, y + hs * k3)
                y = y + hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                rr = r[i]
                y = np.where(np.abs(y) <= SERIES_RADIUS, y, np.nan)
                psi[i] = y
    mask = np.isfinite(psi) & (np.abs(psi) <= SERIES_RADIUS)
    resid = np.full_like(psi, np.nan)
    with np.errstate(all="ignore"):
        pz = (psi[:, 2:] - psi[:, :-2]) / (2 * h)
        P = psi[:, 1:-1]
        R = r[:, None]
        resid[:, 1:-1] = pz ** 2 - 9 * (R * R - bs(P)) * P + 2.25 * R * R * (R * R + gs(P)) ** 2
    return PsiField(r, z, psi, mask, resid, source="march")


def pressure_from_psi(field, psi_ref=PSI_REF, strict=True):
    """p = (1/3) ln(psi / psi_ref); returns (p, singular) where singular marks psi = 0."""
    if not psi_ref > 0:
        raise ParameterError("psi_ref must be positive")
    psi = np.where(field.mask, field.psi, np.nan) if hasattr(field, "psi") else np.asarray(field, float)
    if strict and np.any(psi[np.isfinite(psi)] < 0):
        raise DataError("negative psi in field")
    singular = psi == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.log(psi / psi_ref) / 3.0
    p = np.where(singular, -np.inf, p)
    return p, singular


# ------------------------------------------------------------- contours

def contour_polylines(x, y, values, level, mask=None):
    """Level-set polylines of values[ix, iy] by marching squares with linear edge interpolation.

    Returns a list of (n, 2) arrays of (x, y) vertices; a closed component
    has equal first and last vertices.
    """
    vals = np.asarray(values, dtype=float)
    bad = ~np.isfinite(vals)
    if mask is not None:
        bad |= ~mask
    if bad.any():
        vals = np.where(bad, np.nanmax(vals[~bad]) if (~bad).any() else 0.0, vals)
        mask_arg = ~bad
    else:
        mask_arg = None
    if not (np.nanmin(vals) <= level <= np.nanmax(vals)):
        return []
    pieces = measure.find_contours(vals, level, mask=mask_arg)
    out = []
    for c in pieces:
        xi = np.interp(c[:, 0], np.arange(len(x)), x)
        yi = np.interp(c[:, 1], np.arange(len(y)), y)
        out.append(np.column_stack([xi, yi]))
    return out


def is_closed(poly, tol=1e-9):
    return len(poly) > 2 and np.allclose(poly[0], poly[-1], atol=tol)


def isolines(field, levels):
    """{level: list of polylines} on the masked field; the count per level is the component count."""
    out = {}
    for lv in levels:
        if not lv > 0:
            raise ParameterError("levels must be positive")
        out[lv] = contour_polylines(field.r, field.z, field.psi, lv, field.mask)
    field.polylines = out
    return out


def component_counts(lines, levels=None):
    levels = levels if levels is not None else sorted(lines)
    return [len(lines[lv]) for lv in levels]


def polygon_area(poly):
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def figure2_levels(n=6, step=PSI_REF):
    return [step * i for i in range(1, n + 1)]


# ------------------------------------------------------ critical points

def critical_points(obj, window=(0.05, 1.95, -1.0, 1.0), n=161, tol=1e-8):
    """Zeros of grad psi with Hessian type ("min", "max", "saddle").

    Candidates are local minima of |grad psi| on a coarse grid, refined by
    damped Newton.  `obj` is a BivariatePoly or a PsiField (the latter via a
    bicubic spline).
    """
    grad, hess = _derivatives(obj)
    r = np.linspace(window[0], window[1], n)
    z = np.linspace(window[2], window[3], n)
    R, Z = np.meshgrid(r, z, indexing="ij")
    gr, gz = grad(R, Z)
    g = np.hypot(gr, gz)
    cands = []
    for i in range(1, n - 1):
        for j in range(1, n - 1):
            w = g[i - 1:i + 2, j - 1:j + 2]
            if g[i, j] == w.min() and np.isfinite(g[i, j]):
                cands.append((r[i], z[j]))
    found = []
    for r0, z0 in cands:
        x = _newton(grad, hess, np.array([r0, z0]), window)
        if x is None:
            continue
        gx = np.hypot(*grad(x[0], x[1]))
        if gx > tol:
            continue
        if any(np.hypot(*(x - y[0])) < 1e-6 for y in found):
            continue
        ev = np.linalg.eigvalsh(hess(x[0], x[1]))
        if ev.min() > 0:
            kind = "min"
        elif ev.max() < 0:
            kind = "max"
        elif ev.min() < 0 < ev.max():
            kind = "saddle"
        else:
            kind = "degenerate"
        found.append((x, kind))
    found.sort(key=lambda t: (t[0][0], t[0][1]))
    return [((float(x[0]), float(x[1])), kind) for x, kind in found]


def _derivatives(obj):
    if isinstance(obj, BivariatePoly):
        grad = lambda r, z: obj.gradient(r, z)
        return grad, obj.hessian
    from scipy.interpolate import RectBivariateSpline
    vals = np.where(obj.mask, obj.psi, np.nan)
    if np.isnan(vals).any():
        vals = np.where(np.isnan(vals), np.nanmax(vals), vals)
    sp = RectBivariateSpline(obj.r, obj.z, vals, kx=3, ky=3)

    def grad(r, z):
        return sp.ev(r, z, dx=1), sp.ev(r, z, dy=1)

    def hess(r, z):
        a, b, c = sp.ev(r, z, dx=2), sp.ev(r, z, dx=1, dy=1), sp.ev(r, z, dy=2)
        return np.array([[a, b], [b, c]], dtype=float)

    return grad, hess


def _newton(grad, hess, x, window, iters=60):
    for _ in range(iters):
        g = np.array(grad(x[0], x[1]), dtype=float)
        if np.hypot(*g) < 1e-14:
            return x
        H = hess(x[0], x[1])
        try:
            d = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        g0 = np.hypot(*g)
        while lam > 1e-6:
            xn = x - lam * d
            if np.hypot(*grad(xn[0], xn[1])) < g0:
                break
            lam *= 0.5
        x = xn
        if not (window[0] - 0.1 <= x[0] <= window[1] + 0.1 and window[2] - 0.1 <= x[1] <= window[3] + 0.1):
            return None
    return x
