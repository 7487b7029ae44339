r"""Mittag-Leffler function :math:`E_{\alpha,\beta}(z)` for real arguments.

Two independent branches are used.

* The power series :math:`\sum_k z^k / \Gamma(\alpha k + \beta)`, summed in
  log space.  It is used for ``z >= 0`` and for negative ``z`` only while
  the largest term stays small enough that cancellation costs at most a
  couple of digits.
* For negative ``z`` beyond that point, the inverse Laplace integral of
  :math:`s^{\alpha-\beta}/(s^\alpha + x)` on a Hankel contour (both banks of
  the branch cut plus a small circle), evaluated with adaptive quadrature.  For :math:`\alpha = 1` the Euler integral of the
  incomplete-gamma type is used instead.

Neither branch touches :mod:`distorder.laplace`, so this module can act as
an oracle for it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gammaln, rgamma

from .errors import AccuracyError, DomainError

#: Largest ``|z|`` accepted.
Z_LIMIT = 1.0e3

# Negative-axis series is trusted while its largest term is below this.
_SERIES_MAX_TERM = 1.0e2


@dataclass(frozen=True)
class MLParams:
    """Parameters of one Mittag-Leffler evaluation."""

    alpha: float
    beta: float
    z: float

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise DomainError("alpha must lie in (0, 2]")
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if not math.isfinite(self.z) or abs(self.z) > Z_LIMIT:
            raise DomainError(f"|z| must not exceed {Z_LIMIT:g}")


def _log_terms(alpha, beta, z, kmax):
    k = np.arange(kmax)
    with np.errstate(divide="ignore"):
        logmag = k * math.log(abs(z)) if z != 0 else np.where(k == 0, 0.0, -np.inf)
    # 1/Gamma never vanishes here since alpha*k + beta > 0
    return logmag - gammaln(alpha * k + beta)


def _series_log_max_term(alpha, beta, z):
    if z == 0:
        return float(-gammaln(beta))
    # terms peak near k ~ |z|**(1/alpha) / alpha; the cap only matters far beyond the trust level
    kpeak = min(max(10, int(abs(z) ** (1.0 / alpha) / alpha) + 10), 4096)
    return float(_log_terms(alpha, beta, z, kpeak + 50).max())


def _series(alpha, beta, z):
    if z == 0:
        return float(rgamma(beta))
    kmax = 64
    while True:
        lt = _log_terms(alpha, beta, z, kmax)
        # the terms must have passed their peak and become negligible
        if np.argmax(lt) < kmax - 20 and lt[-1] < lt.max() - 40:
            break
        kmax *= 2
        if kmax > 1 << 16:
            raise AccuracyError("Mittag-Leffler series did not converge", np.inf)
    if z > 0:
        m = lt.max()
        if m > 700:
            raise DomainError("Mittag-Leffler value overflows double precision")
        return float(math.fsum(np.exp(lt)))
    signs = np.where(np.arange(kmax) % 2 == 0, 1.0, -1.0)
    return float(math.fsum(signs * np.exp(lt)))


def _quad(func, a, b, **kw):
    # roundoff warnings only mean the relative target is below what the
    # pieces can show when they partly cancel; accuracy is tested directly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(func, a, b, epsabs=1e-16, epsrel=1e-12, limit=200, **kw)
    return val


def _hankel(alpha, beta, x):
    """E_{alpha,beta}(-x) for 0 < alpha < 1, x > 0, from a Hankel contour.

    ``t**(beta-1) E_{alpha,beta}(-x t**alpha)`` has transform
    ``s**(alpha-beta) / (s**alpha + x)``, which has no poles on the
    principal sheet when ``alpha < 1``.  The contour runs along both banks
    of the negative axis from ``-inf`` to ``-eps`` and round the circle
    ``|s| = eps``.
    """
    sb = math.sin(math.pi * beta)
    sab = math.sin(math.pi * (alpha - beta))
    ca = math.cos(math.pi * alpha)
    rstar = x ** (1.0 / alpha)
    # keep the circle away from the near-pole ridge at r = rstar
    eps = 1.0 if not 0.5 < rstar < 2.0 else 0.5 * rstar

    def ray(r):
        ra = r**alpha
        return (
            math.exp(-r) * r ** (alpha - beta)
            * (ra * sb - x * sab) / (ra * ra + 2 * x * ra * ca + x * x)
        )

    cuts = sorted({eps, 60.0 + eps} | ({rstar} if eps < rstar < 60.0 else set()))
    rays = sum(_quad(ray, a, b) for a, b in zip(cuts[:-1], cuts[1:]))
    rays += _quad(ray, cuts[-1], np.inf)

    def circle(phi):
        s = eps * complex(math.cos(phi), math.sin(phi))
        val = np.exp(s) * s ** (alpha - beta) / (s**alpha + x) * s
        return val.real

    return (rays + _quad(circle, 0.0, math.pi)) / math.pi


def _negative_axis(alpha, beta, z):
    if alpha == 1.0:
        if beta == 1.0:
            return math.exp(z)
        if beta > 1.0:
            val = _quad(lambda s: math.exp(z * s), 0.0, 1.0, weight="alg", wvar=(0.0, beta - 2.0))
            return val * float(rgamma(beta - 1.0))
        return float(rgamma(beta)) + z * _negative_axis(alpha, beta + 1.0, z)
    return _hankel(alpha, beta, -z)


def mittag_leffler(alpha, beta, z, full_output=False):
    """Two-parameter Mittag-Leffler function for real ``z``.

    Parameters
    ----------
    alpha : float
        In ``(0, 1]``; values up to 2 are accepted on the series branch.
    beta : float
        Positive.
    z : float or array_like
        Real argument(s) with ``|z| <= Z_LIMIT``.
    full_output : bool
        Also return a dict naming the branch used and the argument limit.

    Returns
    -------
    float or ndarray
    """
    zs = np.asarray(z, dtype=float)
    out = np.empty(zs.shape)
    branches = []
    for idx, zi in np.ndenumerate(zs):
        p = MLParams(float(alpha), float(beta), float(zi))
        if p.z >= 0 or _series_log_max_term(p.alpha, p.beta, p.z) <= math.log(_SERIES_MAX_TERM):
            out[idx] = _series(p.alpha, p.beta, p.z)
            branches.append("series")
        elif p.alpha <= 1:
            out[idx] = _negative_axis(p.alpha, p.beta, p.z)
            branches.append("integral")
        else:
            raise DomainError("alpha > 1 is only supported where the series is reliable")
    val = out[()] if out.ndim == 0 else out
    if full_output:
        return val, {"branch": branches[0] if len(branches) == 1 else branches, "z_limit": Z_LIMIT}
    return val


def ml_relaxation(alpha, lam, t):
    """``E_alpha(-lam * t**alpha)``, the single-order relaxation profile."""
    t = np.asarray(t, dtype=float)
    return mittag_leffler(alpha, 1.0, -lam * t**alpha)
