"""Flow scenario: the five constants plus grid and tolerance settings."""

import json
import math
from dataclasses import dataclass, asdict, replace

import numpy as np

from .errors import ParameterError, DataError

FIG1 = dict(alpha0=1.0, beta0=0.01, gamma0=0.5, f0=0.97, epsilon=1,
            p_min=0.0, p_max=0.16, p_step=1e-3,
            z_min=-1.5, z_max=1.5, z_step=1e-3, tol=1e-6)


@dataclass(frozen=True)
class FlowScenario:
    alpha0: float
    beta0: float
    gamma0: float
    f0: float
    epsilon: int = 1
    p_min: float = 0.0
    p_max: float = 0.16
    p_step: float = 1e-3
    z_min: float = -1.5
    z_max: float = 1.5
    z_step: float = 1e-3
    tol: float = 1e-6
    zeta_sign: int = 1
    p0: float = 0.0

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise ParameterError(f"epsilon must be +1 or -1, got {self.epsilon}")
        if self.zeta_sign not in (1, -1):
            raise ParameterError("zeta_sign must be +1 or -1")
        if self.p_step <= 0 or self.z_step <= 0:
            raise ParameterError("steps must be positive")
        if not (self.p_min <= self.p0 <= self.p_max):
            raise ParameterError("p range must contain the initial pressure p0")
        if not (self.z_min <= 0.0 <= self.z_max):
            raise ParameterError("z range must contain z=0")

    def check_profiles_data(self):
        """First group of initial inequalities: alpha0>0, beta0>=0, beta0+eps*gamma0 != 0.

        alpha0 is alpha at p = 0; beta0, gamma0 and f0 are values at p0.
        """
        if not self.alpha0 > 0:
            raise ParameterError(f"alpha0 must be positive, got {self.alpha0}")
        if not self.beta0 >= 0:
            raise ParameterError(f"beta0 must be nonnegative, got {self.beta0}")
        if abs(self.beta0 + self.epsilon * self.gamma0) < 1e-8:
            raise ParameterError("beta0 + epsilon*gamma0 vanishes")

    def check_initial_point(self):
        """Second group: f0 > sqrt(beta0), 0 < eps f0^2 + gamma0 < 2 sqrt(alpha0 (f0^2-beta0))/f0."""
        self.check_profiles_data()
        f0 = self.f0
        if not (f0 > 0 and f0 * f0 > self.beta0):
            raise ParameterError(f"f0={f0} must exceed sqrt(beta0)")
        w = self.epsilon * f0 * f0 + self.gamma0
        a = self.alpha0 * math.exp(3.0 * self.p0)
        upper = 2.0 * math.sqrt(a * (f0 * f0 - self.beta0)) / f0
        if not (0.0 < w < upper):
            raise ParameterError(
                f"eps*f0^2+gamma0={w:.6g} outside (0, {upper:.6g})")

    def p_nodes(self):
        return _nodes(self.p_min, self.p_max, self.p_step)

    def z_nodes(self):
        return _nodes(self.z_min, self.z_max, self.z_step)

    def with_steps(self, p_step=None, z_step=None):
        return replace(self, p_step=p_step or self.p_step, z_step=z_step or self.z_step)

    def to_dict(self):
        return asdict(self)


def _nodes(lo, hi, h):
    # nodes are integer multiples of h so that z=0 and p=0 are always hit
    i0 = int(math.ceil(lo / h - 1e-9))
    i1 = int(math.floor(hi / h + 1e-9))
    return np.arange(i0, i1 + 1) * h


def figure1_scenario(**overrides):
    d = dict(FIG1)
    d.update(overrides)
    return FlowScenario(**d)


def load_scenario(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(raw)


def scenario_from_dict(raw):
    if not isinstance(raw, dict):
        raise DataError("scenario must be a JSON object")
    known = set(FlowScenario.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise DataError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("alpha0", "beta0", "gamma0", "f0"):
        if key not in raw:
            raise DataError(f"scenario is missing '{key}'")
    try:
        vals = {k: (int(v) if k in ("epsilon", "zeta_sign") else float(v)) for k, v in raw.items()}
    except (TypeError, ValueError) as exc:
        raise DataError(f"non-numeric scenario value: {exc}") from exc
    return FlowScenario(**vals)
