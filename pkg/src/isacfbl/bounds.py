"""Rate-error tradeoff bounds for the decode-then-estimate ISAC scheme.

Rates are in bits per complex channel use, sensing requirements ``D`` and
MSE values in squared channel-gain units.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .capgeom import CapSpec, cap_spec
from .specfun import chi2_isf, gaussian_q_inv

__all__ = [
    "SystemParams",
    "CodeParams",
    "BoundsReport",
    "BaselineRate",
    "NormalApproxBaseline",
    "CapacityBaseline",
    "BASELINES",
    "ZeroRateRegime",
    "ZERO_RATE",
    "CONSTRAINED",
    "SATURATED",
    "CONVERSE_VARIANTS",
    "ideal_mse",
    "mse_upper_bound",
    "d_m",
    "regime",
    "delta_budget",
    "achievability",
    "achievability_rate",
    "saturation_jump",
    "r_epsilon",
    "converse",
    "converse_sandwich",
    "asymptotic_limits",
    "evaluate_bounds",
]

ZERO_RATE = "zero-rate"
CONSTRAINED = "constrained"
SATURATED = "saturated"
CONVERSE_VARIANTS = ("factor2", "as-printed")
LOG2E = 1.0 / math.log(2.0)


class ZeroRateRegime(ValueError):
    """The sensing requirement cannot be met at any positive rate."""


@dataclass(frozen=True)
class SystemParams:
    """Physical setup.

    rho : per-symbol power budget (linear)
    sigma_sq : noise variance per complex dimension
    h_low, h_high : channel-gain interval known to the encoder
    """

    rho: float
    sigma_sq: float
    h_low: float
    h_high: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        # sigma_sq == 0 is allowed so the noiseless limit can be simulated
        if not self.sigma_sq >= 0:
            raise ValueError(f"sigma_sq must be nonnegative, got {self.sigma_sq!r}")
        if not 0 < self.h_low <= self.h_high:
            raise ValueError(
                f"need 0 < h_low <= h_high, got h_low={self.h_low!r}, h_high={self.h_high!r}"
            )

    @classmethod
    def from_sigma(cls, rho, sigma, h_low, h_high):
        return cls(rho=rho, sigma_sq=sigma * sigma, h_low=h_low, h_high=h_high)

    @property
    def sigma(self):
        return math.sqrt(self.sigma_sq)

    def snr(self, gain):
        if self.sigma_sq == 0:
            return math.inf
        return self.rho * gain * gain / self.sigma_sq


@dataclass(frozen=True)
class CodeParams:
    """Blocklength ``N`` (complex channel uses) and decoding-error level ``epsilon``.

    ``epsilon`` may be any probability so that measured error rates can be
    plugged into the MSE bound; the bounds themselves are meant for
    ``0 < epsilon < 1/2``.
    """

    N: int
    epsilon: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")


class BaselineRate(ABC):
    """Communication-only rate at a given channel gain, ignoring sensing."""

    name = "abstract"

    @abstractmethod
    def evaluate(self, sys, code, gain):
        """Rate in bits per channel use; nonnegative and nondecreasing in gain."""


class NormalApproxBaseline(BaselineRate):
    """``log2(1 + SNR) - sqrt(V / N) Q^{-1}(eps) log2(e)``, floored at zero.

    ``V = SNR (SNR + 2) / (SNR + 1)^2`` is the AWGN dispersion in nats^2.
    """

    name = "normal-approx"

    def evaluate(self, sys, code, gain):
        snr = sys.snr(gain)
        cap = math.log2(1.0 + snr)
        if code.epsilon == 0.5:
            return cap
        v = snr * (snr + 2.0) / (snr + 1.0) ** 2
        rate = cap - math.sqrt(v / code.N) * gaussian_q_inv(code.epsilon) * LOG2E
        return max(rate, 0.0)


class CapacityBaseline(BaselineRate):
    """Shannon capacity ``log2(1 + SNR)``; blocklength and epsilon are ignored."""

    name = "capacity"

    def evaluate(self, sys, code, gain):
        return math.log2(1.0 + sys.snr(gain))


BASELINES = {
    NormalApproxBaseline.name: NormalApproxBaseline,
    CapacityBaseline.name: CapacityBaseline,
}


def _power(sys, code):
    return code.N * sys.rho


def ideal_mse(sys, code):
    """MSE of the ML estimator when the codeword is known: sigma^2 / (N rho)."""
    return sys.sigma_sq / _power(sys, code)


def mse_upper_bound(sys, code, delta):
    """Upper bound on the channel-estimation MSE for codewords of maximal bias ``delta``."""
    if not 0.0 <= delta <= 2.0:
        raise ValueError(f"delta must lie in [0, 2], got {delta!r}")
    P = _power(sys, code)
    eps = code.epsilon
    return (
        sys.sigma_sq / P
        + eps * sys.h_high**2 * delta**2
        + 2.0 * sys.sigma * math.sqrt(eps) * sys.h_high * delta / math.sqrt(P)
    )


def d_m(sys, code):
    """Sensing requirement above which the tradeoff saturates."""
    P = _power(sys, code)
    eps = code.epsilon
    return (
        sys.sigma_sq / P
        + 4.0 * eps * sys.h_high**2
        + 4.0 * sys.sigma * math.sqrt(eps) * sys.h_high / math.sqrt(P)
    )


def regime(sys, code, D):
    if D <= ideal_mse(sys, code):
        return ZERO_RATE
    if D < d_m(sys, code):
        return CONSTRAINED
    return SATURATED


def delta_budget(sys, code, D):
    """Largest maximal bias compatible with the requirement ``D``, clamped to [0, 2]."""
    P = _power(sys, code)
    if D <= sys.sigma_sq / P:
        raise ZeroRateRegime(
            f"D={D!r} does not exceed sigma^2/(N rho)={sys.sigma_sq / P!r}"
        )
    if code.epsilon == 0.0:
        return 2.0
    delta = (math.sqrt(D * P) - sys.sigma) / (sys.h_high * math.sqrt(code.epsilon * P))
    return min(max(delta, 0.0), 2.0)


@dataclass(frozen=True)
class Achievability:
    rate: float
    regime: str
    baseline_rate: float
    cap: CapSpec


def _loss_rate(base, gamma, N):
    if gamma <= 0.0:
        return 0.0
    return max(base + math.log2(gamma) / N, 0.0)


def achievability(sys, code, D, baseline=None):
    """Achievability bound at requirement ``D`` with its cap geometry."""
    baseline = baseline or NormalApproxBaseline()
    base = baseline.evaluate(sys, code, sys.h_low)
    reg = regime(sys, code, D)
    if reg == ZERO_RATE:
        return Achievability(0.0, reg, base, CapSpec(delta=0.0, phi=0.0, gamma=0.0))
    if reg == SATURATED:
        return Achievability(base, reg, base, cap_spec(2.0, code.N, unconstrained=True))
    cap = cap_spec(delta_budget(sys, code, D), code.N)
    return Achievability(_loss_rate(base, cap.gamma, code.N), reg, base, cap)


def achievability_rate(sys, code, D, baseline=None):
    """``(rate, regime)`` for the achievability bound."""
    res = achievability(sys, code, D, baseline)
    return res.rate, res.regime


def saturation_jump(sys, code, baseline=None):
    """Rate increase at ``D = D_m`` relative to the limit from below.

    The cap at full bias 2 is a hemisphere (share 1/2) while the saturated
    regime uses the whole sphere, so the jump is ``1/N`` unless the rate floor
    at zero interferes.
    """
    baseline = baseline or NormalApproxBaseline()
    base = baseline.evaluate(sys, code, sys.h_low)
    left = _loss_rate(base, cap_spec(2.0, code.N).gamma, code.N)
    return base - left


def r_epsilon(sys, code):
    """Smallest radius holding all but ``epsilon`` of the CN(0, sigma^2 I_N) noise mass.

    ``||n||^2`` is ``sigma^2 / 2`` times a chi-square with 2N degrees of freedom.
    """
    eps = code.epsilon
    if eps >= 1.0:
        return 0.0
    if eps <= 0.0:
        return math.inf
    return math.sqrt(0.5 * sys.sigma_sq * chi2_isf(eps, 2 * code.N))


@dataclass(frozen=True)
class ConverseBounds:
    r1: float
    r2: float
    r_eps: float
    gamma_U: float
    R_U_com: float
    low: float
    high: float


def converse(sys, code, D, variant="factor2"):
    """Sphere-packing converse sandwich at requirement ``D``.

    ``variant="factor2"`` uses ``R_com = 2 log2(r1 / r_eps)`` (packing in 2N
    real dimensions); ``"as-printed"`` uses ``log2(r1 / r_eps)``.
    """
    if variant not in CONVERSE_VARIANTS:
        raise ValueError(f"unknown converse variant {variant!r}")
    N = code.N
    r1 = math.sqrt(sys.h_high**2 * N * sys.rho + N * sys.sigma_sq)
    r2 = math.sqrt(sys.h_low**2 * sys.sigma_sq / D + N * sys.sigma_sq) if D > 0 else math.inf
    r_eps = r_epsilon(sys, code)
    gamma_u = r2 / r1
    scale = 2.0 if variant == "factor2" else 1.0
    if r_eps == 0.0:
        r_com = math.inf
    elif math.isinf(r_eps):
        r_com = 0.0
    else:
        r_com = max(scale * math.log2(r1 / r_eps), 0.0)
    if gamma_u >= 1.0:
        low = 0.0
    else:
        g2n = math.exp(2.0 * N * math.log(gamma_u))
        low = max(r_com + math.log1p(-g2n) * LOG2E / N, 0.0)
    return ConverseBounds(r1, r2, r_eps, gamma_u, r_com, low, r_com)


def converse_sandwich(sys, code, D, variant="factor2"):
    res = converse(sys, code, D, variant)
    return res.low, res.high


def asymptotic_limits(sys):
    """Large-blocklength anchors ``(R_L_limit, R_U_limit, capacity)``.

    ``capacity`` is the common value when the gain interval is a point,
    otherwise ``None``.
    """
    r_low = math.log2(1.0 + sys.snr(sys.h_low))
    r_high = math.log2(1.0 + sys.snr(sys.h_high))
    return r_low, r_high, (r_low if sys.h_low == sys.h_high else None)


@dataclass(frozen=True)
class BoundsReport:
    D: float
    D_m: float
    regime: str
    delta_WL: float
    phi_L: float
    gamma_L: float
    R_L: float
    baseline_rate: float
    r1: float
    r2: float
    r_eps: float
    gamma_U: float
    R_U_com: float
    R_U_low: float
    R_U_high: float


def evaluate_bounds(sys, code, D, baseline=None, converse_variant="factor2"):
    """All bound quantities at one ``(N, epsilon, D)`` point."""
    ach = achievability(sys, code, D, baseline)
    conv = converse(sys, code, D, converse_variant)
    return BoundsReport(
        D=D,
        D_m=d_m(sys, code),
        regime=ach.regime,
        delta_WL=ach.cap.delta,
        phi_L=ach.cap.phi,
        gamma_L=ach.cap.gamma,
        R_L=ach.rate,
        baseline_rate=ach.baseline_rate,
        r1=conv.r1,
        r2=conv.r2,
        r_eps=conv.r_eps,
        gamma_U=conv.gamma_U,
        R_U_com=conv.R_U_com,
        R_U_low=conv.low,
        R_U_high=conv.high,
    )
