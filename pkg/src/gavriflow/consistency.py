"""Algebra of the first-order pair F = G = 0 for the generatrix graph r = f(p, z).

    F = (f^2 - beta) pi^2 - alpha (zeta^2 + 1)
    G = f^2 (eps f^2 + gamma)^2 (zeta^2 + 1) - 4 alpha (f^2 - beta)

with pi = f_p and zeta = f_z.  Also: closures, Jacobi brackets,
completeness coefficients, the r-chart closure and residuals of the
Cartesian-graph system.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InadmissiblePointError
from .profiles import ProfileTriple, ProfileValues

FD_STEP = 1e-5


@dataclass(frozen=True)
class JetPoint:
    p: float
    z: float
    f: float
    pi: float
    zeta: float

    def __post_init__(self):
        if not self.f > 0:
            raise DomainError("f must be positive")


@dataclass(frozen=True)
class CaseBJet:
    p: float
    r: float
    g: float
    gp: float
    gr: float
    tau: int


def values_at(profiles, p):
    """ProfileValues at p; derivatives by centered differences for inconsistent triples."""
    if isinstance(profiles, ProfileValues):
        return profiles
    if profiles.consistent:
        return profiles.at(p)
    h = FD_STEP
    d = lambda fn: (fn(p + h) - fn(p - h)) / (2 * h)
    return ProfileValues(profiles.alpha(p), profiles.beta(p), profiles.gamma(p),
                         d(profiles.alpha), d(profiles.beta), d(profiles.gamma),
                         profiles.epsilon)


def is_admissible(f, pv, epsilon=None):
    eps = pv.epsilon if epsilon is None else epsilon
    f2 = f * f
    if not (f > 0 and f2 > pv.beta):
        return False
    w = eps * f2 + pv.gamma
    return 0.0 < w < 2.0 * math.sqrt(pv.alpha * (f2 - pv.beta)) / f


def eval_FG(jet, profiles):
    pv = values_at(profiles, jet.p)
    return _FG(jet.f, jet.pi, jet.zeta, pv)


def _FG(f, pi, zeta, pv):
    a, b, g, eps = pv.alpha, pv.beta, pv.gamma, pv.epsilon
    f2 = f * f
    s = zeta * zeta + 1
    F = (f2 - b) * pi * pi - a * s
    G = f2 * (eps * f2 + g) ** 2 * s - 4 * a * (f2 - b)
    return F, G


def closure(f, pv, epsilon=None, tol=1e-12):
    """(pi, zeta^2) solving F = G = 0 at radius f."""
    eps = pv.epsilon if epsilon is None else epsilon
    f2 = f * f
    w = eps * f2 + pv.gamma
    if w <= 0:
        raise DomainError(f"eps*f^2+gamma = {w} is not positive")
    if f2 <= pv.beta:
        raise InadmissiblePointError("f^2 <= beta")
    zeta_sq = 4 * pv.alpha * (f2 - pv.beta) / (f2 * w * w) - 1
    if zeta_sq < -tol:
        raise InadmissiblePointError(f"zeta^2 = {zeta_sq} < 0")
    return 2 * eps * pv.alpha / (f * w), max(zeta_sq, 0.0)


def _partials(f, pi, zeta, pv):
    a, b, g, da, db, dg, eps = pv
    f2 = f * f
    w = eps * f2 + g
    s = zeta * zeta + 1
    return dict(
        Fp=-db * pi * pi - da * s,
        Gp=2 * dg * f2 * w * s - 4 * da * (f2 - b) + 4 * a * db,
        Fz=0.0, Gz=0.0,
        Ff=2 * f * pi * pi,
        Gf=2 * f * w * w * s + 4 * eps * f ** 3 * w * s - 8 * a * f,
        Fpi=2 * (f2 - b) * pi, Gpi=0.0,
        Fzeta=-2 * a * zeta,
        Gzeta=2 * f2 * w * w * zeta,
    )


def jacobi_bracket(jet, profiles):
    """[F,G] from the reduced formula using G_pi = F_z = G_z = 0."""
    pv = values_at(profiles, jet.p)
    d = _partials(jet.f, jet.pi, jet.zeta, pv)
    pi, zeta = jet.pi, jet.zeta
    return (-d["Gp"] * d["Fpi"] - pi * d["Gf"] * d["Fpi"]
            + zeta * d["Ff"] * d["Gzeta"] - zeta * d["Gf"] * d["Fzeta"])


def jacobi_bracket_generic(jet, profiles):
    """Five-slot bracket (F_x + p F_z) G_p - ... with all partials kept."""
    pv = values_at(profiles, jet.p)
    d = _partials(jet.f, jet.pi, jet.zeta, pv)
    pi, zeta = jet.pi, jet.zeta
    return ((d["Fp"] + pi * d["Ff"]) * d["Gpi"] - (d["Gp"] + pi * d["Gf"]) * d["Fpi"]
            + (d["Fz"] + zeta * d["Ff"]) * d["Gzeta"] - (d["Gz"] + zeta * d["Gf"]) * d["Fzeta"])


def jacobi_bracket_expanded(jet, profiles):
    """Same bracket written out as a polynomial in f (independent expansion)."""
    a, b, g, da, db, dg, eps = values_at(profiles, jet.p)
    f, pi, z2 = jet.f, jet.pi, jet.zeta ** 2
    f2 = f * f
    w = eps * f2 + g
    s = z2 + 1
    inner = w * w * s + 2 * eps * f2 * w * s - 4 * a
    quarter = (-pi * (f2 - b) * (dg * f2 * w * s - 2 * da * (f2 - b) + 2 * a * db)
               - pi * pi * f * (f2 - b) * inner
               + pi * pi * z2 * f ** 3 * w * w
               + z2 * a * f * inner)
    return 4 * quarter


def bracket_scale(jet, profiles):
    """Magnitude of the individual terms of the reduced bracket; used to normalise tolerances."""
    pv = values_at(profiles, jet.p)
    d = _partials(jet.f, jet.pi, jet.zeta, pv)
    pi, zeta = jet.pi, jet.zeta
    terms = [d["Gp"] * d["Fpi"], pi * d["Gf"] * d["Fpi"],
             zeta * d["Ff"] * d["Gzeta"], zeta * d["Gf"] * d["Fzeta"]]
    return max(abs(t) for t in terms)


def closure_jet(p, z, f, profiles, zeta_sign=1):
    pv = values_at(profiles, p)
    pi, zeta_sq = closure(f, pv)
    return JetPoint(p, z, f, pi, zeta_sign * math.sqrt(zeta_sq))


def bracket_polynomial_expanded(f, pv):
    """Left side of the degree-10 polynomial obtained after closure substitution."""
    a, b, g, da, db, dg, eps = pv
    k = da / a
    f2 = f * f
    w = eps * f2 + g
    u = f2 - b
    bracket = u * w + 2 * eps * f2 * u - f2 * w
    return (-2 * eps * f2 * u * w * (dg * u - 0.5 * k * u * w + 0.5 * db * w)
            - 4 * a * u * bracket
            + 4 * a * f2 * u * w - f ** 4 * w ** 3
            + (4 * a * u - f2 * w * w) * bracket)


def bracket_polynomial_factored(f, pv):
    """Factored quartic form of the same polynomial."""
    c4, c2, c0 = completeness_residual(f, pv)
    f2 = f * f
    return -f2 * (f2 - pv.beta) * (pv.epsilon * f2 + pv.gamma) * (c4 * f2 * f2 + c2 * f2 + c0)


def completeness_residual(f, pv, epsilon=None):
    """Coefficients (c4, c2, c0) of the quartic c4 f^4 + c2 f^2 + c0."""
    a, b, g, da, db, dg, eps0 = pv
    eps = eps0 if epsilon is None else epsilon
    k = da / a
    c4 = 3 - k
    c2 = 2 * eps * dg - eps * k * g + k * b + db + 4 * eps * g
    c0 = -2 * eps * b * dg + eps * k * b * g + eps * g * db - 4 * a + g * g
    return c4, c2, c0


def caseB_closure(r, pv, tau):
    """(g_p, g_r^2) for the chart z = g(p, r)."""
    if tau not in (1, -1):
        raise DomainError("tau must be +1 or -1")
    a, b, g = pv.alpha, pv.beta, pv.gamma
    r2 = r * r
    if r2 <= b:
        raise InadmissiblePointError("r^2 <= beta")
    q = r2 * (g - tau * r2) ** 2
    den = 4 * a * (r2 - b) - q
    if den <= 0:
        raise InadmissiblePointError("denominator of g_r^2 is not positive")
    gr_sq = q / den
    gp = tau * math.sqrt(a * (1 + gr_sq) / (r2 - b))
    return gp, gr_sq


def caseB_equations(r, gp, gr, pv, tau):
    """Residuals of the two r-chart equations."""
    a, b, g = pv.alpha, pv.beta, pv.gamma
    r2 = r * r
    e1 = (r2 - b) * gp * gp - a * (1 + gr * gr)
    e2 = r2 * (g - tau * r2) ** 2 * (1 + gr * gr) - 4 * a * (r2 - b) * gr * gr
    return e1, e2


def consistency_report(jet, profiles):
    """JSON-ready record {point, F, G, bracket, completeness}."""
    pv = values_at(profiles, jet.p)
    F, G = eval_FG(jet, pv)
    return {
        "point": [jet.p, jet.z, jet.f, jet.pi, jet.zeta],
        "F": F,
        "G": G,
        "bracket": jacobi_bracket(jet, pv),
        "completeness": list(completeness_residual(jet.f, pv)),
    }


# ------------------------------------------------- Cartesian graph system

def prop51_residuals(x, y, f, ux, uy, fp, partials=None):
    """Residuals of the four equations for a graph z = f(p; x, y) at fixed p.

    x, y are 1-D node vectors, the other arrays are indexed [ix, iy].
    `partials` may supply any of fx, fy, fxx, fxy, fyy, fpx, fpy,
    ux_x, ux_y, uy_x, uy_y; the rest come from centered differences.
    Returns (div, mom_x, mom_y, normal) residual arrays.
    """
    partials = dict(partials or {})
    fp = np.asarray(fp, dtype=float)
    if np.any(fp == 0):
        raise DomainError("f_p vanishes on the grid")

    def get(name, arr, axis):
        if name in partials:
            return np.asarray(partials[name], dtype=float)
        return np.gradient(arr, x if axis == 0 else y, axis=axis, edge_order=2)

    fx = get("fx", f, 0)
    fy = get("fy", f, 1)
    fxx = get("fxx", fx, 0)
    fxy = get("fxy", fx, 1)
    fyy = get("fyy", fy, 1)
    fpx = get("fpx", fp, 0)
    fpy = get("fpy", fp, 1)
    ux_x, ux_y = get("ux_x", ux, 0), get("ux_y", ux, 1)
    uy_x, uy_y = get("uy_x", uy, 0), get("uy_y", uy, 1)
    afp = np.abs(fp)
    div = fpx * ux + fp * ux_x + fpy * uy + fp * uy_y
    mom_x = ux * ux_x + uy * ux_y + fx / afp
    mom_y = ux * uy_x + uy * uy_y + fy / afp
    normal = fxx * ux * ux + 2 * fxy * ux * uy + fyy * uy * uy - (1 + fx * fx + fy * fy) / afp
    return div, mom_x, mom_y, normal


def half_cylinder(x, y, p, r=None, dr=None, b=None):
    """Exact half-cylinder solution f = -sqrt(r^2 - x^2), u^x = sqrt(r^2-x^2)/sqrt(r|r'|), u^y = b.

    Returns (f, ux, uy, fp, partials) sampled on the (x, y) grid.
    """
    r = r or (lambda q: q)
    dr = dr or (lambda q: 1.0)
    b = b or (lambda q: 0.0)
    X, Y = np.meshgrid(np.asarray(x, float), np.asarray(y, float), indexing="ij")
    R, Rp = r(p), dr(p)
    if np.any(np.abs(X) >= R):
        raise DomainError("grid must lie inside |x| < r(p)")
    q = np.sqrt(R * R - X * X)
    c = math.sqrt(R * abs(Rp))
    f = -q
    ux = q / c
    uy = np.full_like(X, b(p))
    fp = -R * Rp / q
    zero = np.zeros_like(X)
    partials = dict(
        fx=X / q, fy=zero, fxx=R * R / q ** 3, fxy=zero, fyy=zero,
        fpx=-R * Rp * X / q ** 3, fpy=zero,
        ux_x=-X / (q * c), ux_y=zero, uy_x=zero, uy_y=zero,
    )
    return f, ux, uy, fp, partials
