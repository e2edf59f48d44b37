"""Profile functions alpha(p), beta(p), gamma(p).

alpha is closed form, beta and gamma come either from a fixed-step RK4
march of the consistency ODEs or from exact rational power series in alpha.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .errors import ParameterError, SingularSystemError

DEGENERACY = 1e-8
# RK4 is stable on the negative real axis up to h*|lambda| = 2.785
RK4_STABILITY = 2.7


class ProfileValues(NamedTuple):
    alpha: float
    beta: float
    gamma: float
    dalpha: float
    dbeta: float
    dgamma: float
    epsilon: int


@dataclass
class ProfileTriple:
    alpha: Callable
    beta: Callable
    gamma: Callable
    dalpha: Callable
    dbeta: Callable
    dgamma: Callable
    epsilon: int
    valid_interval: tuple
    consistent: bool
    existence_interval: tuple | None = None
    termination: dict = field(default_factory=dict)
    samples: dict | None = None
    alpha0: float | None = None

    def at(self, p):
        return ProfileValues(self.alpha(p), self.beta(p), self.gamma(p),
                             self.dalpha(p), self.dbeta(p), self.dgamma(p), self.epsilon)

    def flow(self, p, beta, gamma):
        """(beta', gamma') used when marching other quantities together with the profiles.

        Consistent triples are re-integrated from the state, others just
        return their own derivatives.
        """
        if self.consistent:
            a = self.alpha(p)
            return consistency_rhs(beta, gamma, a, 3.0 * a, self.epsilon)
        return self.dbeta(p), self.dgamma(p)

    def contains(self, p):
        lo, hi = self.valid_interval
        return lo < p < hi


def alpha_closed_form(alpha0, p):
    if not alpha0 > 0:
        raise ParameterError(f"alpha0 must be positive, got {alpha0}")
    return alpha0 * np.exp(3.0 * np.asarray(p, dtype=float)) if np.ndim(p) else alpha0 * math.exp(3.0 * p)


def consistency_rhs(beta, gamma, alpha, dalpha, epsilon, threshold=DEGENERACY):
    """Solve the two linear consistency conditions for (beta', gamma').

    The ratio dalpha/alpha enters the coefficients; it equals 3 on the
    alpha0*exp(3p) family and is taken as 3 when alpha is 0.
    """
    beta = np.asarray(beta, dtype=float) if np.ndim(beta) else beta
    s = beta + epsilon * gamma
    if np.any(np.abs(s) < threshold) or not np.all(np.isfinite(s)):
        raise SingularSystemError(f"|beta+eps*gamma| below {threshold}")
    k = dalpha / alpha if np.all(alpha != 0) else 3.0
    # [[1, 2 eps], [gamma, -2 beta]] (beta', gamma') = (r1, r2)
    r1 = -(k * beta + epsilon * (4.0 - k) * gamma)
    r2 = 4.0 * epsilon * alpha - k * beta * gamma - epsilon * gamma * gamma
    det = -2.0 * s
    dbeta = (r1 * (-2.0 * beta) - 2.0 * epsilon * r2) / det
    dgamma = (r2 - gamma * r1) / det
    return dbeta, dgamma


def consistency_residuals(beta, gamma, alpha, dbeta, dgamma, epsilon):
    """Residuals of the two consistency conditions on the alpha0*exp(3p) family."""
    r1 = dbeta + 2 * epsilon * dgamma + 3 * beta + epsilon * gamma
    r2 = gamma * dbeta - 2 * beta * dgamma + 3 * beta * gamma - 4 * epsilon * alpha + epsilon * gamma * gamma
    return r1, r2


# ---------------------------------------------------------------- RK4 march

def _rhs(p, y, alpha0, eps):
    # scalar version of consistency_rhs with k = 3; tuples keep the march cheap
    b, g = y
    a = alpha0 * math.exp(3.0 * p)
    r1 = -(3.0 * b + eps * g)
    r2 = 4.0 * eps * a - 3.0 * b * g - eps * g * g
    det = -2.0 * (b + eps * g)
    return ((-2.0 * b * r1 - 2.0 * eps * r2) / det, (r2 - g * r1) / det)


def _rk4(p, y, h, alpha0, eps):
    b, g = y
    k1 = _rhs(p, y, alpha0, eps)
    k2 = _rhs(p + h / 2, (b + h / 2 * k1[0], g + h / 2 * k1[1]), alpha0, eps)
    k3 = _rhs(p + h / 2, (b + h / 2 * k2[0], g + h / 2 * k2[1]), alpha0, eps)
    k4 = _rhs(p + h, (b + h * k3[0], g + h * k3[1]), alpha0, eps)
    return (b + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            g + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def _jacobian_radius(p, y, alpha0, eps):
    b, g = y
    f0 = _rhs(p, y, alpha0, eps)
    db, dg = 1e-7 * (1.0 + abs(b)), 1e-7 * (1.0 + abs(g))
    fb = _rhs(p, (b + db, g), alpha0, eps)
    fg = _rhs(p, (b, g + dg), alpha0, eps)
    j11, j21 = (fb[0] - f0[0]) / db, (fb[1] - f0[1]) / db
    j12, j22 = (fg[0] - f0[0]) / dg, (fg[1] - f0[1]) / dg
    half_tr = 0.5 * (j11 + j22)
    disc = half_tr * half_tr - (j11 * j22 - j12 * j21)
    if disc >= 0:
        root = math.sqrt(disc)
        return max(abs(half_tr + root), abs(half_tr - root))
    return math.sqrt(half_tr * half_tr - disc)


def _classify(p, y, s_prev, h, alpha0, eps, threshold):
    """Reason to stop at state y (None if the state is fine)."""
    beta, gamma = y
    s = beta + eps * gamma
    if not (math.isfinite(beta) and math.isfinite(gamma)) or abs(s) < threshold or s * s_prev < 0:
        return "singular"
    try:
        rho = _jacobian_radius(p, y, alpha0, eps)
    except (ArithmeticError, FloatingPointError, ValueError):
        return "singular"
    if abs(h) * rho > RK4_STABILITY:
        return "stiff"
    return None


def _march(alpha0, beta0, gamma0, eps, p0, p_end, h, threshold):
    """March from p0 towards p_end; returns nodes, states and both event locations."""
    ps, ys = [p0], [(float(beta0), float(gamma0))]
    neg_beta_at = None
    reason = "range"
    p, y = p0, ys[0]
    s0 = beta0 + eps * gamma0
    n = int(math.floor(abs(p_end - p0) / h + 1e-9))
    hs = h if p_end > p0 else -h
    end = p_end
    with np.errstate(all="ignore"):
        for i in range(n):
            try:
                y_new = _rk4(p, y, hs, alpha0, eps)
            except (ArithmeticError, OverflowError):
                y_new = (math.nan, math.nan)
            why = _classify(p + hs, y_new, s0, hs, alpha0, eps, threshold)
            if why is None and neg_beta_at is None and y_new[0] < 0:
                neg_beta_at = _bisect(p, y, hs, alpha0, eps,
                                      lambda q, v: v[0] < 0)
            if why is not None:
                reason = why
                end = _bisect(p, y, hs, alpha0, eps,
                              lambda q, v: _classify(q, v, s0, hs, alpha0, eps, threshold) is not None)
                if neg_beta_at is None and why == "singular":
                    # beta may cross zero inside the failing step as well
                    mid = _rk4(p, y, (end - p), alpha0, eps)
                    if math.isfinite(mid[0]) and mid[0] < 0:
                        neg_beta_at = _bisect(p, y, end - p, alpha0, eps, lambda q, v: v[0] < 0)
                break
            p = p0 + (i + 1) * hs
            y = y_new
            ps.append(p)
            ys.append(y)
    return np.array(ps), np.array(ys).reshape(-1, 2), end, reason, neg_beta_at


def _bisect(p, y, h, alpha0, eps, bad, iters=60):
    """Locate along one partial RK4 step from (p, y) where `bad` first holds."""
    lo, hi = 0.0, 1.0
    with np.errstate(all="ignore"):
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            try:
                v = _rk4(p, y, mid * h, alpha0, eps)
            except (ArithmeticError, OverflowError):
                v = (math.nan, math.nan)
            if bad(p + mid * h, v):
                hi = mid
            else:
                lo = mid
    return p + 0.5 * (lo + hi) * h


def integrate_profiles(scenario, p_range=(-1.0, 10.0), step=1e-3, *, p_init=None,
                       threshold=DEGENERACY):
    """RK4 integration of the consistency ODEs from (beta0, gamma0) at p_init (default scenario.p0).

    The returned triple is valid where beta >= 0 and |beta + eps*gamma|
    stays above `threshold`.  The march also stops once the fixed step
    leaves the RK4 stability region (the system is stiff for large p);
    the reason for each end is kept in `termination`.
    """
    scenario.check_profiles_data()
    alpha0, eps = scenario.alpha0, scenario.epsilon
    lo, hi = p_range
    if p_init is None:
        p_init = scenario.p0
    if not lo <= p_init <= hi:
        raise ParameterError("p_init must lie in p_range")
    if step <= 0:
        raise ParameterError("step must be positive")
    b0, g0 = scenario.beta0, scenario.gamma0
    pf, yf, end_hi, why_hi, neg_hi = _march(alpha0, b0, g0, eps, p_init, hi, step, threshold)
    pb, yb, end_lo, why_lo, neg_lo = _march(alpha0, b0, g0, eps, p_init, lo, step, threshold)
    ps = np.concatenate([pb[::-1], pf[1:]])
    ys = np.concatenate([yb[::-1], yf[1:]])

    existence = (end_lo, end_hi)
    valid_lo = neg_lo if neg_lo is not None else end_lo
    valid_hi = neg_hi if neg_hi is not None else end_hi
    if b0 == 0.0:
        # beta starts on the boundary; the open interval lies on the side where it grows
        db, _ = consistency_rhs(b0, g0, alpha0 * math.exp(3 * p_init), 3 * alpha0 * math.exp(3 * p_init), eps)
        if db > 0:
            valid_lo = p_init
        elif db < 0:
            valid_hi = p_init
    termination = {
        "lower": "beta<0" if neg_lo is not None else why_lo,
        "upper": "beta<0" if neg_hi is not None else why_hi,
        "existence_lower": why_lo,
        "existence_upper": why_hi,
    }
    return _triple_from_nodes(ps, ys, step, alpha0, eps, (valid_lo, valid_hi),
                              existence, termination)


def _triple_from_nodes(ps, ys, h, alpha0, eps, valid, existence, termination):
    betas, gammas = ys[:, 0].copy(), ys[:, 1].copy()
    p_first = ps[0]

    def state(p):
        # nearest node plus one partial RK4 step: exact at nodes, O(h^5) between
        p = float(p)
        i = int(round((p - p_first) / h))
        i = min(max(i, 0), len(ps) - 1)
        dp = p - ps[i]
        y = tuple(ys[i])
        if dp != 0.0:
            y = _rk4(ps[i], y, dp, alpha0, eps)
        return y

    def vec(fn):
        def wrapped(p):
            if np.ndim(p):
                return np.array([fn(q) for q in np.ravel(p)]).reshape(np.shape(p))
            return fn(p)
        return wrapped

    alpha = vec(lambda p: alpha_closed_form(alpha0, p))
    dalpha = vec(lambda p: 3.0 * alpha_closed_form(alpha0, p))

    def derivs(p):
        y = state(p)
        a = alpha_closed_form(alpha0, p)
        return consistency_rhs(y[0], y[1], a, 3 * a, eps, threshold=0.0)

    return ProfileTriple(
        alpha=alpha,
        beta=vec(lambda p: float(state(p)[0])),
        gamma=vec(lambda p: float(state(p)[1])),
        dalpha=dalpha,
        dbeta=vec(lambda p: float(derivs(p)[0])),
        dgamma=vec(lambda p: float(derivs(p)[1])),
        epsilon=eps,
        valid_interval=valid,
        consistent=True,
        existence_interval=existence,
        termination=termination,
        samples={"p": ps, "beta": betas, "gamma": gammas},
        alpha0=alpha0,
    )


def profile_table(triple):
    """Rows (p, alpha, beta, gamma, dbeta, dgamma) at the sample nodes inside valid_interval."""
    s = triple.samples
    if s is None:
        raise ParameterError("triple carries no samples")
    lo, hi = triple.valid_interval
    rows = []
    for p, b, g in zip(s["p"], s["beta"], s["gamma"]):
        if not lo <= p <= hi:
            continue
        a = triple.alpha(p)
        db, dg = consistency_rhs(b, g, a, 3 * a, triple.epsilon, threshold=0.0)
        rows.append((p, a, b, g, db, dg))
    return np.array(rows).reshape(-1, 6)


def exceptional_profiles(a0):
    """Constant-alpha family alpha=4a0, beta=4(1-a0)p, gamma=4(a0-p).

    The pair F=G=0 is solved by f=2 sqrt(p) but the profiles do not satisfy
    the consistency conditions, so the triple is flagged inconsistent.
    """
    if not 0 < a0 <= 1:
        raise ParameterError("a0 must lie in (0, 1]")
    c = lambda v: (lambda p: v + 0.0 * np.asarray(p, dtype=float) if np.ndim(p) else v)
    return ProfileTriple(
        alpha=c(4.0 * a0),
        beta=lambda p: 4.0 * (1.0 - a0) * p,
        gamma=lambda p: 4.0 * (a0 - p),
        dalpha=c(0.0),
        dbeta=c(4.0 * (1.0 - a0)),
        dgamma=c(-4.0),
        epsilon=1,
        valid_interval=(0.0, math.inf),
        consistent=False,
    )


# ------------------------------------------------------------ exact series

@dataclass(frozen=True)
class RationalSeries:
    coefficients: tuple
    variable: str = "alpha"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(Fraction(c) for c in self.coefficients))

    @property
    def order(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        if isinstance(x, (Fraction, int)):
            acc = Fraction(0)
            for c in reversed(self.coefficients):
                acc = acc * x + c
            return acc
        cs = [float(c) for c in self.coefficients]
        acc = np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        for c in reversed(cs):
            acc = acc * x + c
        return acc

    def derivative(self):
        return RationalSeries(tuple(k * c for k, c in enumerate(self.coefficients))[1:] or (0,),
                              self.variable)

    def truncated(self, order):
        return RationalSeries(self.coefficients[:order + 1], self.variable)

    def to_json(self):
        return [f"{c.numerator}/{c.denominator}" for c in self.coefficients]

    @classmethod
    def from_json(cls, items, variable="alpha"):
        return cls(tuple(Fraction(s) for s in items), variable)


def _conv(x, y, k):
    return sum(x[i] * y[k - i] for i in range(k + 1))


def series_beta_gamma(order):
    """Exact series beta = 1/3 + sum b_k alpha^k, gamma = -1 + sum g_k alpha^k (epsilon = 1).

    On the series d/dp acts as 3 alpha d/dalpha, so the k-th coefficient of a
    derivative is 3k times the coefficient.  At each order the two conditions
    are linear in (b_k, g_k) and are solved by Cramer's rule.
    """
    if order < 0:
        raise ParameterError("order must be nonnegative")
    b = [Fraction(1, 3)]
    g = [Fraction(-1)]
    for k in range(1, order + 1):
        bb = b + [Fraction(0)]
        gg = g + [Fraction(0)]
        db = [3 * i * c for i, c in enumerate(bb)]
        dg = [3 * i * c for i, c in enumerate(gg)]
        # residuals at order k with the unknowns set to zero
        e1 = Fraction(0)
        e2 = _conv(gg, db, k) - 2 * _conv(bb, dg, k) + 3 * _conv(bb, gg, k) + _conv(gg, gg, k)
        if k == 1:
            e2 -= 4
        # linear coefficients of (b_k, g_k)
        a11, a12 = 3 * k + 3, 6 * k + 1
        a21 = 3 * k * g[0] + 3 * g[0]
        a22 = -6 * k * b[0] + 3 * b[0] + 2 * g[0]
        det = a11 * a22 - a12 * a21
        b.append((-e1 * a22 + e2 * a12) / det)
        g.append((-a11 * e2 + a21 * e1) / det)
    return RationalSeries(tuple(b)), RationalSeries(tuple(g))


def series_residuals(bs, gs):
    """Coefficients of both conditions after substituting the series (all zero through the order)."""
    n = min(bs.order, gs.order)
    b, g = list(bs.coefficients[:n + 1]), list(gs.coefficients[:n + 1])
    db = [3 * i * c for i, c in enumerate(b)]
    dg = [3 * i * c for i, c in enumerate(g)]
    r1, r2 = [], []
    for k in range(n + 1):
        r1.append(db[k] + 2 * dg[k] + 3 * b[k] + g[k])
        e2 = _conv(g, db, k) - 2 * _conv(b, dg, k) + 3 * _conv(b, g, k) + _conv(g, g, k)
        if k == 1:
            e2 -= 4
        r2.append(e2)
    return r1, r2


def series_profiles(order=16, alpha0=1.0, valid_interval=(-math.inf, math.log(2.0) / 3)):
    """ProfileTriple with beta, gamma given by the truncated series in alpha = alpha0 e^{3p}."""
    bs, gs = series_beta_gamma(order)
    dbs, dgs = bs.derivative(), gs.derivative()
    alpha = lambda p: alpha_closed_form(alpha0, p)
    return ProfileTriple(
        alpha=alpha,
        beta=lambda p: bs(alpha(p)),
        gamma=lambda p: gs(alpha(p)),
        dalpha=lambda p: 3 * alpha(p),
        dbeta=lambda p: 3 * alpha(p) * dbs(alpha(p)),
        dgamma=lambda p: 3 * alpha(p) * dgs(alpha(p)),
        epsilon=1,
        valid_interval=valid_interval,
        consistent=True,
        alpha0=alpha0,
    )
