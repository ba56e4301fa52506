"""Codeword-set geometry on the complex power sphere ||x||^2 = N rho.

The bias of a pair ``(u, v)`` is ``|1 - u^H v / (N rho)|``; a set's maximal
bias is the largest pairwise value.  A bias budget ``delta`` corresponds to a
cap angle ``phi = arccos((2 - delta^2) / 2)`` (``delta`` is the chord of
``phi`` on the unit sphere) and the cap's share of the sphere is
``(1/2) I_{sin^2(phi/2)}((2N - 1)/2, 1/2)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import kernels
from .specfun import DomainError, reg_inc_beta

__all__ = [
    "CapSpec",
    "PowerMismatchError",
    "RejectionBudgetExceeded",
    "maximal_bias",
    "bias_to_angle",
    "angle_to_bias",
    "cap_area_ratio",
    "cap_spec",
    "sample_sphere",
    "sample_cap",
    "cap_bias",
    "bias_region_probability",
    "real_cap_fraction_mc",
]

DEFAULT_MAX_ATTEMPTS = 10**7
POWER_RTOL = 1e-9


class PowerMismatchError(ValueError):
    """A codeword is off the power sphere."""


class RejectionBudgetExceeded(RuntimeError):
    """Rejection sampling gave up before producing the requested points."""

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class CapSpec:
    """Cap geometry for a bias budget.

    ``gamma`` is 1 by convention in the unconstrained regime, where the
    codewords may use the whole sphere.
    """

    delta: float
    phi: float
    gamma: float


def _as_codebook(codebook):
    X = np.atleast_2d(np.asarray(codebook, dtype=np.complex128))
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("codebook must be a nonempty (M, N) collection of complex vectors")
    if not np.all(np.isfinite(X)):
        raise ValueError("codebook entries must be finite")
    return X


def check_power(X, power, rtol=POWER_RTOL):
    energy = np.sum(np.abs(X) ** 2, axis=1)
    bad = np.flatnonzero(np.abs(energy - power) > rtol * power)
    if bad.size:
        i = int(bad[0])
        raise PowerMismatchError(
            f"codeword {i} has squared norm {energy[i]!r}, expected {power!r}"
        )


def maximal_bias(codebook, power):
    """Largest ``|1 - u^H v / power|`` over ordered codeword pairs, u = v included."""
    X = _as_codebook(codebook)
    if not power > 0:
        raise DomainError(f"power must be positive, got {power!r}")
    check_power(X, power)
    return min(kernels.max_pairwise_bias(X, power), 2.0)


def bias_to_angle(delta):
    if not 0.0 <= delta <= 2.0:
        raise DomainError(f"bias must lie in [0, 2], got {delta!r}")
    # equals acos((2 - delta^2) / 2) but stays accurate for small delta
    return 2.0 * math.asin(0.5 * delta)


def angle_to_bias(phi):
    if not 0.0 <= phi <= math.pi:
        raise DomainError(f"angle must lie in [0, pi], got {phi!r}")
    return 2.0 * math.sin(0.5 * phi)


def cap_area_ratio(phi, N):
    """Area share of a cap of angle ``phi`` on the real sphere S^{2N-1}."""
    if not 0.0 <= phi <= math.pi:
        raise DomainError(f"angle must lie in [0, pi], got {phi!r}")
    if int(N) != N or N < 1:
        raise DomainError(f"blocklength must be a positive integer, got {N!r}")
    if phi == math.pi:
        # sin(pi/2)**2 == 1 exactly in floating point, but keep the endpoint explicit
        return 0.5
    x = math.sin(0.5 * phi) ** 2
    return 0.5 * reg_inc_beta(x, (2.0 * N - 1.0) / 2.0, 0.5)


def cap_spec(delta, N, unconstrained=False):
    if unconstrained:
        return CapSpec(delta=2.0, phi=math.pi, gamma=1.0)
    phi = bias_to_angle(delta)
    return CapSpec(delta=delta, phi=phi, gamma=cap_area_ratio(phi, N))


def sample_sphere(N, power, rng, size=None):
    """Uniform point(s) on ``{x in C^N : ||x||^2 = power}``.

    Draws 2N standard normals per point and rescales; returns shape ``(N,)``
    or ``(size, N)``.
    """
    if N < 1:
        raise DomainError(f"blocklength must be >= 1, got {N!r}")
    if not power > 0:
        raise DomainError(f"power must be positive, got {power!r}")
    shape = (N,) if size is None else (size, N)
    g = rng.standard_normal(shape + (2,))
    x = g[..., 0] + 1j * g[..., 1]
    norm = np.sqrt(np.sum(x.real**2 + x.imag**2, axis=-1, keepdims=True))
    return x * (math.sqrt(power) / norm)


def cap_bias(center, x, power):
    """``|1 - center^H x / power|`` for one point or a stack of points."""
    x = np.asarray(x)
    return np.abs(1.0 - (x @ np.conj(center)) / power)


def _orthogonal_unit(u, N, rng):
    # uniform unit vector in the complex orthogonal complement of unit vector u
    while True:
        g = rng.standard_normal((N, 2))
        w = g[:, 0] + 1j * g[:, 1]
        w = w - (np.vdot(u, w)) * u
        nrm = np.linalg.norm(w)
        if nrm > 1e-12:
            return w / nrm


def sample_cap(center, delta_max, N, power, rng, max_attempts=DEFAULT_MAX_ATTEMPTS,
               proposal="shell", batch=256, return_attempts=False):
    """Uniform point on the sphere with ``|1 - center^H x / power| <= delta_max / 2``.

    The pole coordinate ``z = center^H x / power`` of a uniform sphere point
    has ``|z|^2 ~ Beta(1, N - 1)`` and a uniform, independent phase.  With
    ``proposal="shell"`` candidates for ``z`` are drawn from that law
    restricted to ``|z| >= 1 - delta_max / 2`` (a superset of the cap, so the
    accepted points are still exactly uniform on the cap), which keeps small
    caps in high dimension reachable.  ``proposal="sphere"`` rejects plain
    :func:`sample_sphere` draws instead.

    With ``return_attempts`` the number of candidates consumed is returned too.
    """
    x, attempts = _sample_cap(center, delta_max, N, power, rng, max_attempts, proposal, batch)
    return (x, attempts) if return_attempts else x


def _sample_cap(center, delta_max, N, power, rng, max_attempts, proposal, batch):
    if not 0.0 < delta_max <= 2.0:
        raise DomainError(f"delta_max must lie in (0, 2], got {delta_max!r}")
    center = np.asarray(center, dtype=np.complex128)
    if center.shape != (N,):
        raise ValueError(f"center must have shape ({N},), got {center.shape}")
    check_power(center[None, :], power)
    t = 0.5 * delta_max

    if proposal == "sphere":
        attempts = 0
        while attempts < max_attempts:
            n = min(batch, max_attempts - attempts)
            cand = sample_sphere(N, power, rng, size=n)
            ok = np.flatnonzero(cap_bias(center, cand, power) <= t)
            if ok.size:
                attempts += int(ok[0]) + 1
                return cand[ok[0]], attempts
            attempts += n
        raise RejectionBudgetExceeded(
            f"no cap sample within {max_attempts} attempts (N={N}, delta_max={delta_max})",
            attempts,
        )
    if proposal != "shell":
        raise ValueError(f"unknown proposal {proposal!r}")

    u = center / math.sqrt(power)
    one_minus_s0 = 1.0 - max(0.0, 1.0 - t) ** 2
    # |1 - z| <= t forces |arg z| <= asin(t); the phase is uniform, so
    # proposing it on that window leaves the conditional law unchanged
    half_width = math.asin(t) if t < 1.0 else math.pi
    attempts = 0
    while attempts < max_attempts:
        n = min(batch, max_attempts - attempts)
        if N == 1:
            s = np.ones(n)
        else:
            v = 1.0 - rng.random(n)
            s = 1.0 - one_minus_s0 * v ** (1.0 / (N - 1))
        theta = rng.uniform(-half_width, half_width, n)
        z = np.sqrt(s) * np.exp(1j * theta)
        ok = np.flatnonzero(np.abs(1.0 - z) <= t)
        if ok.size:
            k = int(ok[0])
            attempts += k + 1
            w = z[k] * u
            if N > 1:
                w = w + math.sqrt(max(0.0, 1.0 - s[k])) * _orthogonal_unit(u, N, rng)
            x = w * (math.sqrt(power) / np.linalg.norm(w))
            return x, attempts
        attempts += n
    raise RejectionBudgetExceeded(
        f"no cap sample within {max_attempts} attempts (N={N}, delta_max={delta_max})",
        attempts,
    )


def bias_region_probability(delta_max, N):
    """P{|1 - z| <= delta_max / 2} for the pole coordinate z of a uniform point.

    Exact acceptance rate of :func:`sample_cap` with ``proposal="sphere"``,
    by quadrature over ``|z|^2 ~ Beta(1, N - 1)``.
    """
    t = 0.5 * delta_max
    if t <= 0.0:
        return 0.0

    def phase_share(r):
        if r <= 0.0:
            return 1.0 if t >= 1.0 else 0.0
        kappa = (1.0 + r * r - t * t) / (2.0 * r)
        return math.acos(min(1.0, max(-1.0, kappa))) / math.pi

    if N == 1:
        return phase_share(1.0)
    lo = max(0.0, 1.0 - t) ** 2

    def integrand(s):
        return (N - 1) * (1.0 - s) ** (N - 2) * phase_share(math.sqrt(s))

    val, _ = integrate.quad(integrand, lo, 1.0, epsabs=1e-13, epsrel=1e-11, limit=200)
    return val


def real_cap_fraction_mc(N, phi, samples, rng, chunk=200_000):
    """Monte Carlo share of the sphere within polar angle ``phi / 2`` of a pole.

    The sphere is C^N viewed as R^{2N}; the pole is the first real axis.
    Returns ``(fraction, standard_error)``.
    """
    cos_half = math.cos(0.5 * phi)
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        w = sample_sphere(N, 1.0, rng, size=n)
        hits += int(np.count_nonzero(w[:, 0].real >= cos_half))
        done += n
    frac = hits / samples
    return frac, math.sqrt(max(frac * (1.0 - frac), 0.0) / samples)
