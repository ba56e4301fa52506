"""Special functions used by the rate-error bounds.

Log-gamma, the regularized incomplete beta and gamma functions, the
chi-square quantile and the Gaussian upper-tail inverse.  Everything here is
scalar, pure and deterministic.
"""

import math
from functools import lru_cache
from statistics import NormalDist

__all__ = [
    "DomainError",
    "ConvergenceError",
    "log_gamma",
    "reg_inc_beta",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "chi2_cdf",
    "chi2_sf",
    "chi2_quantile",
    "chi2_isf",
    "gaussian_q",
    "gaussian_q_inv",
]

BETA_MAX_ITER = 300
BETA_EPS = 1e-15
GAMMA_EPS = 1e-16
_TINY = 1e-300
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_STD_NORMAL = NormalDist()


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class ConvergenceError(ArithmeticError):
    """An iterative evaluation did not reach its tolerance."""


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def _stirling_tail(a: float) -> float:
    # lgamma(a) - [(a - 1/2) ln a - a + ln sqrt(2 pi)], series valid for a >= 10
    if a < 10.0:
        return math.lgamma(a) - ((a - 0.5) * math.log(a) - a + _LN_SQRT_2PI)
    r = 1.0 / a
    r2 = r * r
    return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))


def _lgamma_diff(a: float, b: float) -> float:
    """lgamma(a + b) - lgamma(a) without the large cancellation for big a."""
    if a < 10.0:
        return math.lgamma(a + b) - math.lgamma(a)
    return (
        (a - 0.5) * math.log1p(b / a)
        + b * math.log(a + b)
        - b
        + _stirling_tail(a + b)
        - _stirling_tail(a)
    )


def _beta_cf(x: float, a: float, b: float) -> float:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETA_EPS:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge in {BETA_MAX_ITER} "
        f"iterations (x={x}, a={a}, b={b})"
    )


def _beta_front(x: float, a: float, b: float) -> float:
    # x^a (1-x)^b / (a B(a, b)), with the gamma ratio taken about the larger parameter
    if a >= b:
        log_inv_beta = _lgamma_diff(a, b) - math.lgamma(b)
    else:
        log_inv_beta = _lgamma_diff(b, a) - math.lgamma(a)
    return math.exp(log_inv_beta + a * math.log(x) + b * math.log1p(-x)) / a


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Evaluated by continued fraction on whichever side of the mean
    ``(a + 1) / (a + b + 2)`` converges fastest, using
    ``I_x(a, b) = 1 - I_{1-x}(b, a)`` for the upper side.
    """
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        value = _beta_front(x, a, b) * _beta_cf(x, a, b)
    else:
        value = 1.0 - _beta_front(1.0 - x, b, a) * _beta_cf(1.0 - x, b, a)
    return min(1.0, max(0.0, value))


def _log_gamma_front(a: float, x: float) -> float:
    """ln(x^a e^{-x} / Gamma(a)), stable for large a with x near a."""
    if a < 10.0:
        return a * math.log(x) - x - math.lgamma(a)
    t = (x - a) / a
    return a * (math.log1p(t) - t) + 0.5 * math.log(a) - _LN_SQRT_2PI - _stirling_tail(a)


def _gamma_max_iter(a: float) -> int:
    return 1000 + int(50.0 * math.sqrt(a))


def _lower_gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_gamma_max_iter(a)):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * GAMMA_EPS:
            return total * math.exp(_log_gamma_front(a, x))
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_gamma_cf(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _gamma_max_iter(a) + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < GAMMA_EPS:
            return h * math.exp(_log_gamma_front(a, x))
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a: float, x: float) -> None:
    if not a > 0.0:
        raise DomainError(f"incomplete gamma requires a > 0, got {a!r}")
    if not x >= 0.0:
        raise DomainError(f"incomplete gamma requires x >= 0, got {x!r}")


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _lower_gamma_series(a, x))
    return max(0.0, 1.0 - _upper_gamma_cf(a, x))


def reg_upper_gamma(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _lower_gamma_series(a, x))
    return min(1.0, _upper_gamma_cf(a, x))


def _check_dof(k: int) -> None:
    if int(k) != k or k < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {k!r}")


def chi2_cdf(x: float, k: int) -> float:
    """P{chi2_k <= x}."""
    _check_dof(k)
    if x <= 0.0:
        return 0.0
    return reg_lower_gamma(0.5 * k, 0.5 * x)


def chi2_sf(x: float, k: int) -> float:
    """P{chi2_k > x}."""
    _check_dof(k)
    if x <= 0.0:
        return 1.0
    return reg_upper_gamma(0.5 * k, 0.5 * x)


def _chi2_logpdf(x: float, k: int) -> float:
    a = 0.5 * k
    return _log_gamma_front(a, 0.5 * x) - math.log(x)


def _wilson_hilferty(p_lower: float, k: int) -> float:
    z = _STD_NORMAL.inv_cdf(p_lower)
    c = 2.0 / (9.0 * k)
    guess = k * (1.0 - c + z * math.sqrt(c)) ** 3
    return guess if guess > 0.0 else 0.5 * k * p_lower ** (2.0 / k) + 1e-300


def _solve_chi2(target: float, k: int, upper: bool) -> float:
    """Root of chi2_cdf(x) = target (or chi2_sf(x) = target when ``upper``).

    Bracketing keeps Newton steps honest; a step that leaves the bracket or
    fails to shrink it falls back to bisection (geometric when both ends are
    positive, since the low quantiles of small k live near zero).
    """
    tail = chi2_sf if upper else chi2_cdf
    # residual > 0 means x lies above the root
    sign = -1.0 if upper else 1.0

    def residual(x: float) -> float:
        return sign * (tail(x, k) - target)

    lo, hi = 0.0, max(float(k), 1.0)
    while residual(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
    p_lower = 1.0 - target if upper else target
    x = _wilson_hilferty(min(max(p_lower, 1e-300), 1.0 - 1e-16), k)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)

    for _ in range(200):
        r = residual(x)
        if r == 0.0:
            return x
        if r > 0.0:
            hi = x
        else:
            lo = x
        # d/dx of the residual is the chi-square density in both orientations
        step = r / math.exp(_chi2_logpdf(x, k))
        x_new = x - step
        if not lo < x_new < hi:
            x_new = math.sqrt(lo * hi) if lo > 0.0 and hi / lo > 4.0 else 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * x or hi - lo <= 4e-16 * hi:
            return x_new
        x = x_new
    raise ConvergenceError(f"chi-square quantile did not converge (target={target}, k={k})")


def chi2_quantile(p: float, k: int) -> float:
    """x such that P{chi2_k <= x} = p, for 0 < p < 1."""
    _check_dof(k)
    if not 0.0 < p < 1.0:
        raise DomainError(f"chi2_quantile requires 0 < p < 1, got {p!r}")
    if p > 0.5:
        # 1 - p is exact here, and the upper tail keeps full relative precision
        return _solve_chi2(1.0 - p, k, upper=True)
    return _solve_chi2(p, k, upper=False)


@lru_cache(maxsize=4096)
def chi2_isf(q: float, k: int) -> float:
    """x such that P{chi2_k > x} = q, for 0 < q < 1."""
    _check_dof(k)
    if not 0.0 < q < 1.0:
        raise DomainError(f"chi2_isf requires 0 < q < 1, got {q!r}")
    if q > 0.5:
        return _solve_chi2(1.0 - q, k, upper=False)
    return _solve_chi2(q, k, upper=True)


def gaussian_q(x: float) -> float:
    """Standard normal upper tail Q(x) = P{Z > x}."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def gaussian_q_inv(p: float) -> float:
    """Inverse of the standard normal upper tail."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"gaussian_q_inv requires 0 < p < 1, got {p!r}")
    # Q^{-1}(p) = -Phi^{-1}(p) keeps precision for small p
    return -_STD_NORMAL.inv_cdf(p)
