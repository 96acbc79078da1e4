"""Closed-form operator families with prescribed traceability behavior.

Two families are provided.  The two-slope family alternates the decay
exponent of mu_n between alpha and beta on runs whose lengths are controlled
by a nondecreasing gap sequence a_n; constant gaps average the two slopes,
growing gaps keep both extremes visible forever.  The step family freezes
mu on blocks that stretch so fast that the value collapses by an unbounded
factor at each block end, which makes every positive power behave the same
way.

Both families are realized as analytic log-profiles (piecewise-linear
f(t) = -log mu(e^t)), so integral diagnostics can be evaluated at scales far
beyond the materialization cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, SpecNotDiverging
from .sequences import (
    DEFAULT_CAP,
    EigenvalueSequence,
    LogLinearProfile,
)

DEFAULT_HORIZON = 2600.0

CONSTANT = "constant"
LINEAR = "linear"
CUSTOM = "custom"


@dataclass
class TwoSlopeSpec:
    """Alternating-slope profile: slope alpha on [b_{2k}, b_{2k+1}), beta on
    [b_{2k+1}, b_{2k+2}), with b_n the partial sums of the gap sequence a_n.

    gaps: (CONSTANT, a) for a_n = a, (LINEAR,) for a_n = n, or
    (CUSTOM, [a_1, a_2, ...]).  Requires 0 < beta <= alpha, a_n nondecreasing,
    a_1 > 0.
    """

    alpha: float
    beta: float
    gaps: tuple

    def __post_init__(self):
        if not (0 < self.beta <= self.alpha):
            raise ValueError("need 0 < beta <= alpha")
        kind = self.gaps[0]
        if kind == CONSTANT:
            if len(self.gaps) != 2 or self.gaps[1] <= 0:
                raise ValueError("CONSTANT gaps need a positive value")
        elif kind == LINEAR:
            pass
        elif kind == CUSTOM:
            a = np.asarray(self.gaps[1], dtype=float)
            if len(a) == 0 or a[0] <= 0:
                raise ValueError("CUSTOM gaps need a_1 > 0")
            if np.any(np.diff(a) < 0):
                raise ValueError("gap sequence must be nondecreasing")
        else:
            raise ValueError(f"unknown gaps kind {kind!r}")

    def gap_values(self, t_horizon: float):
        """a_1, a_2, ... until the partial sums pass t_horizon."""
        kind = self.gaps[0]
        if kind == CUSTOM:
            return np.asarray(self.gaps[1], dtype=float)
        if kind == CONSTANT:
            a = float(self.gaps[1])
            m = int(t_horizon / a) + 2
            return np.full(m, a)
        # LINEAR: b_n = n(n+1)/2
        m = int(math.sqrt(2.0 * t_horizon)) + 3
        return np.arange(1, m + 1, dtype=float)


def two_slope_profile(spec: TwoSlopeSpec, t_horizon: float = DEFAULT_HORIZON) -> LogLinearProfile:
    a = spec.gap_values(t_horizon)
    b = np.concatenate([[0.0], np.cumsum(a)])
    slopes = np.where(np.arange(len(a)) % 2 == 0, spec.alpha, spec.beta)
    f_knots = np.concatenate([[0.0], np.cumsum(slopes * a)])
    return LogLinearProfile(b, f_knots[:-1], slopes)


def two_slope_sequence(spec: TwoSlopeSpec, cap: int = DEFAULT_CAP,
                       t_horizon: float = DEFAULT_HORIZON) -> EigenvalueSequence:
    """mu_n = exp(-f(log n)) for the alternating-slope profile."""
    horizon = max(t_horizon, math.log(cap) + 2.0)
    prof = two_slope_profile(spec, horizon)
    if prof.t_max < math.log(cap):
        raise CapExceeded("custom gap list ends before the cap")
    name = f"two_slope(alpha={spec.alpha:g},beta={spec.beta:g},{spec.gaps[0]})"
    return EigenvalueSequence.from_profile(prof, cap=cap, name=name)


@dataclass
class StepSpec:
    """Block profile mu(x) = 1/x_k on (x_{k-1}, x_k] with x_k = round(e^{b_k}).

    preset q > 1 uses b_k = k^q; a custom strictly increasing b list may be
    given instead.  Block spacings b_{k+1} - b_k must grow, otherwise the
    collapse ratios stop vanishing and the construction loses its point.
    """

    q: float | None = None
    b_values: list | None = None

    def __post_init__(self):
        if (self.q is None) == (self.b_values is None):
            raise ValueError("give exactly one of q or b_values")
        if self.q is not None and self.q <= 1:
            raise SpecNotDiverging("preset exponent must exceed 1")

    def b_array(self, t_horizon: float):
        if self.b_values is not None:
            b = np.asarray(self.b_values, dtype=float)
            if b[0] != 0:
                b = np.concatenate([[0.0], b])
        else:
            m = int(t_horizon ** (1.0 / self.q)) + 2
            b = np.arange(0, m + 1, dtype=float) ** self.q
        # snap to integer block ends while e^b is exactly representable; the
        # perturbation beyond that range would be below e^{-36} relative
        exact = b <= 36.0
        x = np.round(np.exp(b[exact]))
        b = b.copy()
        b[exact] = np.log(x)
        b[0] = 0.0
        if np.any(np.diff(b) <= 0):
            raise SpecNotDiverging("blocks collapse: b must stay strictly increasing")
        d = np.diff(b)
        if len(d) >= 2 and np.any(np.diff(d) <= 1e-12):
            raise SpecNotDiverging("block spacings b_{n+1} - b_n must grow")
        return b


def step_profile(spec: StepSpec, t_horizon: float = DEFAULT_HORIZON) -> LogLinearProfile:
    b = spec.b_array(t_horizon)
    # piece (b_{k-1}, b_k] carries the constant value b_k
    return LogLinearProfile(b, b[1:], np.zeros(len(b) - 1))


def step_sequence(spec: StepSpec, cap: int = DEFAULT_CAP,
                  t_horizon: float = DEFAULT_HORIZON) -> EigenvalueSequence:
    """Piecewise-constant sequence with unboundedly growing collapse factors."""
    horizon = max(t_horizon, math.log(cap) + 2.0)
    prof = step_profile(spec, horizon)
    if prof.t_max < math.log(cap):
        raise CapExceeded("b list ends before the cap")
    name = f"step(q={spec.q:g})" if spec.q is not None else "step(custom)"
    return EigenvalueSequence.from_profile(prof, cap=cap, name=name)


def step_block_ends(spec: StepSpec, cap: int) -> np.ndarray:
    """The integer block ends x_k that fit under the cap."""
    b = spec.b_array(max(math.log(cap) + 2.0, 40.0))
    x = np.round(np.exp(b[(b > 0) & (b <= min(36.0, math.log(cap) + 1e-9))]))
    return x[x <= cap].astype(np.int64)


# ---------------------------------------------------------------------------
# integral ratio diagnostics

def _staircase_sigma(seq: EigenvalueSequence, gamma: float, x: float) -> float:
    """integral_1^x mu(y)^gamma dy with mu(y) frozen between integer indices."""
    if x > seq.cap:
        raise CapExceeded("x beyond cap; no analytic profile available")
    if x < 1.0:
        raise ValueError("x must be >= 1")
    n = int(math.floor(x))
    vals = seq.prefix(min(n + 1, seq.cap)) ** gamma
    full = float(vals[: n - 1].sum()) if n >= 2 else 0.0
    return full + (x - n) * float(vals[min(n, len(vals)) - 1])


def sigma_ratio(seq: EigenvalueSequence, gamma: float, x: float, lam: float = 2.0) -> float:
    """sigma(lam x)/sigma(x) for sigma(x) = integral_1^x mu(y)^gamma dy.

    Profile-backed sequences evaluate the per-piece closed forms in log space
    (pieces whose exponent rate vanishes fall back to the logarithmic
    antiderivative); raw sequences integrate the frozen staircase directly,
    which requires lam*x within the cap.
    """
    if lam <= 1.0:
        raise ValueError("lam must exceed 1")
    if seq.profile is not None:
        t = np.log(np.array([x, lam * x]))
        ls = seq.profile.log_sigma(gamma, t)
        return float(np.exp(ls[1] - ls[0]))
    return _staircase_sigma(seq, gamma, lam * x) / _staircase_sigma(seq, gamma, x)


def s_ratio(seq: EigenvalueSequence, gamma: float, x: float, lam: float = 2.0) -> float:
    """s(x/lam)/s(x) for the tail integral s(x) = integral_x^inf mu(y)^gamma dy."""
    if lam <= 1.0:
        raise ValueError("lam must exceed 1")
    if seq.profile is not None:
        t = np.log(np.array([x / lam, x]))
        ls, rem = seq.profile.log_s_tail(gamma, t)
        if rem > ls[1] - 16.0:  # remainder must be negligible at the smaller tail
            raise CapExceeded("profile horizon too small for this tail ratio")
        return float(np.exp(ls[0] - ls[1]))
    lo = seq.power(gamma) if gamma != 1.0 else seq

    def s_at(xx: float) -> float:
        n = int(math.floor(xx))
        tail, _, _ = lo.tail_sum(n)
        vals = lo.prefix(min(n, lo.cap))
        return tail + (n + 1 - xx) * float(vals[-1]) if n >= 1 else tail

    return s_at(x / lam) / s_at(x)
