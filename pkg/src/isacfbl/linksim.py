"""Monte Carlo simulation of the decode-then-estimate scheme.

A random spherical-cap codebook is sent over ``y = h x + n``; the receiver
ML-decodes the message and then forms the ML channel estimate
``x_hat^H y / ||x_hat||^2`` from the decoded codeword.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import kernels
from .bounds import CodeParams, SystemParams, mse_upper_bound
from .capgeom import (
    DEFAULT_MAX_ATTEMPTS,
    RejectionBudgetExceeded,
    check_power,
    maximal_bias,
    sample_cap,
    sample_sphere,
)

__all__ = [
    "Codebook",
    "McConfig",
    "McReport",
    "InfeasibleCodebook",
    "DECODER_MODES",
    "build_cap_codebook",
    "transmit",
    "ml_decode",
    "ml_estimate_h",
    "run_trials",
    "run_campaign",
    "campaign_rngs",
]

DECODER_MODES = ("genie", "midpoint")
CHUNK = 4096
# one-sided 3-sigma confidence level for the error-rate upper limit
UPPER_CONFIDENCE = stats.norm.cdf(3.0)
# squared rounding error of a noiseless channel estimate is ~1e-32
ROUNDING_SLACK = 1e-24


class InfeasibleCodebook(RejectionBudgetExceeded):
    """The requested (M, delta, N) codebook could not be placed."""

    def __init__(self, M, delta_budget, N, attempts):
        super().__init__(
            f"could not place M={M} codewords with maximal bias <= {delta_budget} "
            f"at N={N} within {attempts} candidate draws",
            attempts,
        )
        self.M = M
        self.delta_budget = delta_budget
        self.N = N


@dataclass(frozen=True)
class Codebook:
    codewords: np.ndarray = field(repr=False)
    power: float
    delta: float
    budget: float = 2.0

    def __post_init__(self):
        check_power(self.codewords, self.power)

    @property
    def M(self):
        return self.codewords.shape[0]

    @property
    def N(self):
        return self.codewords.shape[1]


@dataclass(frozen=True)
class McConfig:
    """One simulation campaign.

    ``h_true`` is the complex channel coefficient; its magnitude must lie in
    ``[sys.h_low, sys.h_high]``.  ``decoder`` is ``"genie"`` (decode with the
    true gain) or ``"midpoint"`` (mid-interval magnitude, true phase).
    """

    sys: SystemParams
    N: int
    M: int
    delta_budget: float
    h_true: complex = 1.2
    trials: int = 100_000
    seed: int = 42
    decoder: str = "genie"
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if not 0.0 < self.delta_budget <= 2.0:
            raise ValueError(f"delta_budget must lie in (0, 2], got {self.delta_budget!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if self.decoder not in DECODER_MODES:
            raise ValueError(f"decoder must be one of {DECODER_MODES}, got {self.decoder!r}")
        mag = abs(self.h_true)
        tol = 1e-12 * self.sys.h_high
        if not self.sys.h_low - tol <= mag <= self.sys.h_high + tol:
            raise ValueError(
                f"|h_true|={mag!r} outside [{self.sys.h_low!r}, {self.sys.h_high!r}]"
            )
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def power(self):
        return self.N * self.sys.rho

    def decoder_gain(self):
        if self.decoder == "genie":
            return complex(self.h_true)
        mid = 0.5 * (self.sys.h_low + self.sys.h_high)
        phase = math.atan2(complex(self.h_true).imag, complex(self.h_true).real)
        return complex(mid * math.cos(phase), mid * math.sin(phase))


@dataclass(frozen=True)
class McReport:
    N: int
    M: int
    delta_budget: float
    delta: float
    decoder: str
    trials: int
    seed: int
    errors: int
    eps_hat: float
    eps_se: float
    mse_hat: float
    mse_se: float
    prop1_bound: float
    margin: float
    eps_upper: float
    prop1_bound_upper: float

    def consistent(self, k=3.0):
        """``mse_hat`` does not exceed the bound by more than ``k`` standard errors."""
        return self.mse_hat <= self.prop1_bound + k * self.mse_se + ROUNDING_SLACK


def campaign_rngs(seed):
    """Codebook generator and a factory of per-chunk trial generators.

    Chunk ``j`` draws from ``SeedSequence(seed, spawn_key=(1, j))``, so any
    chunk can be reproduced on its own.
    """
    codebook_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))

    def chunk_rng(j):
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, j))))

    return codebook_rng, chunk_rng


def build_cap_codebook(config, rng):
    """Draw ``M`` codewords with pairwise maximal bias within ``config.delta_budget``.

    A pole is drawn uniformly on the sphere; candidates come from
    :func:`sample_cap` around it and are kept only if their bias against
    every codeword kept so far is within budget.
    """
    N, M, P, budget = config.N, config.M, config.power, config.delta_budget
    pole = sample_sphere(N, P, rng)
    if M == 1:
        return Codebook(pole[None, :], P, 0.0, budget)
    words = np.empty((M, N), dtype=np.complex128)
    kept = 0
    attempts = 0
    while kept < M:
        remaining = config.max_attempts - attempts
        if remaining <= 0:
            raise InfeasibleCodebook(M, budget, N, attempts)
        try:
            cand, used = sample_cap(pole, budget, N, P, rng, max_attempts=remaining,
                                    return_attempts=True)
        except RejectionBudgetExceeded as exc:
            raise InfeasibleCodebook(M, budget, N, attempts + exc.attempts) from None
        attempts += used
        if kernels.max_bias_to_set(words[:kept], cand, P) <= budget:
            words[kept] = cand
            kept += 1
    return Codebook(words, P, maximal_bias(words, P), budget)


def transmit(codeword, h, sigma_sq, rng):
    """``h x + n`` with ``n ~ CN(0, sigma_sq I)``; works row-wise on a stack of codewords."""
    x = np.asarray(codeword, dtype=np.complex128)
    g = rng.standard_normal(x.shape + (2,))
    s = math.sqrt(0.5 * sigma_sq)
    return h * x + s * (g[..., 0] + 1j * g[..., 1])


def _codeword_array(codebook):
    if isinstance(codebook, Codebook):
        return codebook.codewords
    return np.atleast_2d(np.asarray(codebook, dtype=np.complex128))


def ml_decode(y, codebook, gain):
    """Index minimizing ``||y - gain x_i||^2``; ties go to the lowest index."""
    C = _codeword_array(codebook)
    if C.shape[0] == 0:
        raise ValueError("empty codebook")
    idx, _ = kernels.decode_estimate(np.asarray(y)[None, :], C, gain)
    return int(idx[0])


def ml_estimate_h(x_hat, y):
    """ML channel estimate ``x_hat^H y / ||x_hat||^2``."""
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    energy = float(np.vdot(x_hat, x_hat).real)
    if energy == 0.0:
        raise ValueError("cannot estimate the channel from an all-zero codeword")
    return complex(np.vdot(x_hat, np.asarray(y))) / energy


def run_trials(codebook, h, sigma_sq, gain, n, rng):
    """Simulate ``n`` uses of the scheme.

    Returns ``(messages, decoded, h_hat)`` arrays.
    """
    C = _codeword_array(codebook)
    messages = rng.integers(0, C.shape[0], size=n)
    Y = transmit(C[messages], h, sigma_sq, rng)
    decoded, h_hat = kernels.decode_estimate(Y, C, gain)
    return messages, decoded, h_hat


def _eps_upper(errors, trials):
    if errors >= trials:
        return 1.0
    return float(stats.beta.ppf(UPPER_CONFIDENCE, errors + 1, trials - errors))


def run_campaign(config, codebook=None):
    """Run ``config.trials`` independent uses and summarize them.

    Trials are processed in fixed-size chunks with counter-derived generators
    and reduced in chunk order, so the report is a deterministic function of
    the configuration.
    """
    codebook_rng, chunk_rng = campaign_rngs(config.seed)
    if codebook is None:
        codebook = build_cap_codebook(config, codebook_rng)
    h = complex(config.h_true)
    gain = config.decoder_gain()
    sigma_sq = config.sys.sigma_sq

    errors = 0
    s1 = 0.0
    s2 = 0.0
    done = 0
    j = 0
    while done < config.trials:
        n = min(CHUNK, config.trials - done)
        msg, dec, h_hat = run_trials(codebook, h, sigma_sq, gain, n, chunk_rng(j))
        sq = (h_hat.real - h.real) ** 2 + (h_hat.imag - h.imag) ** 2
        errors += int(np.count_nonzero(msg != dec))
        s1 += float(np.sum(sq))
        s2 += float(np.sum(sq * sq))
        done += n
        j += 1

    T = config.trials
    eps_hat = errors / T
    mse_hat = s1 / T
    var = max(s2 - s1 * s1 / T, 0.0) / (T - 1) if T > 1 else 0.0
    mse_se = math.sqrt(var / T)
    eps_se = math.sqrt(eps_hat * (1.0 - eps_hat) / T)
    delta = codebook.delta
    bound = mse_upper_bound(config.sys, CodeParams(config.N, eps_hat), delta)
    eps_up = _eps_upper(errors, T)
    bound_up = mse_upper_bound(config.sys, CodeParams(config.N, eps_up), delta)
    return McReport(
        N=config.N,
        M=codebook.M,
        delta_budget=config.delta_budget,
        delta=delta,
        decoder=config.decoder,
        trials=T,
        seed=config.seed,
        errors=errors,
        eps_hat=eps_hat,
        eps_se=eps_se,
        mse_hat=mse_hat,
        mse_se=mse_se,
        prop1_bound=bound,
        margin=bound - mse_hat,
        eps_upper=eps_up,
        prop1_bound_upper=bound_up,
    )
