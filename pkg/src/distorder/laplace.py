r"""Numerical inverse Laplace transform and forward transform of sampled data.

Inversion evaluates

.. math:: f(t) = \frac{1}{2\pi i}\int_{\mathcal C} e^{zt} F(z)\,dz

on one of two contours.

``shape="talbot"``
    The optimised cotangent contour of Weideman and Trefethen,
    :math:`z(\theta) = (N/t)(-0.6122 + 0.5017\,\theta\cot(0.6407\,\theta)
    + 0.2645 i\theta)`, with the midpoint rule in :math:`\theta`.  It wraps
    the negative real axis, so the transform must be analytic off that
    axis.  Every transform in this package qualifies: ``Phi(z)`` has
    positive imaginary part for ``0 < arg z < pi`` and so never vanishes
    in the slit plane.  This is the default because it converges
    geometrically in ``N``.
``shape="vertical"``
    The Bromwich line ``Re z = gamma`` truncated at ``|Im z| <= H``, with
    ``gamma`` scaled as ``gamma_t / t``.  Panels of length ``pi / t``
    (half an oscillation of ``e^{izt}``) are integrated with Gauss-Legendre
    and the resulting alternating partial sums are accelerated with Wynn's
    epsilon algorithm.  It is slow but makes no analyticity assumption left
    of ``gamma`` and serves as the reference.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammainc

from .errors import AccuracyError, AccuracyWarning, DomainError
from .mu_model import MuSpec, PsiParams, eval_phi
from .series import TimeSeries

_WT_A, _WT_B, _WT_C, _WT_D = -0.6122, 0.5017, 0.6407, 0.2645


@dataclass(frozen=True)
class ContourSpec:
    """Bromwich contour parameters.

    Parameters
    ----------
    gamma : float
        Abscissa scale.  For ``shape="vertical"`` the line sits at
        ``Re z = gamma / t``.  Unused by the Talbot contour.
    height_T : float
        Truncation of the vertical line, in units of ``1 / t``:
        ``|Im z| <= height_T / t``.  Unused by the Talbot contour.
    n_nodes : int
        Talbot nodes, or Gauss points per panel for the vertical line.
    rule : {"trapezoid", "gauss_panels"}
        Quadrature rule.  Talbot uses the (midpoint) trapezoid rule; the
        vertical line uses Gauss panels.
    shape : {"talbot", "vertical"}
    tol : float
        Tail tolerance, relative to the largest contribution, above which
        an :class:`AccuracyError` is raised.
    """

    gamma: float = 2.0
    height_T: float = 2000.0
    n_nodes: int = 32
    rule: str = "trapezoid"
    shape: str = "talbot"
    tol: float = 1e-8

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("contour abscissa gamma must be positive")
        if not self.height_T > 0:
            raise DomainError("contour height must be positive")
        if self.n_nodes < 16:
            raise DomainError("contour needs at least 16 nodes")
        if self.rule not in ("trapezoid", "gauss_panels"):
            raise DomainError(f"unknown quadrature rule {self.rule!r}")
        if self.shape not in ("talbot", "vertical"):
            raise DomainError(f"unknown contour shape {self.shape!r}")

    @classmethod
    def vertical(cls, psi=None, **kw):
        """Vertical line with the default abscissa ``max(e^{1/beta1} + 0.5, 2)``."""
        gamma = 2.0 if psi is None else max(math.exp(1.0 / psi.beta1) + 0.5, 2.0)
        kw.setdefault("n_nodes", 16)
        return cls(gamma=gamma, rule="gauss_panels", shape="vertical", **kw)

    def check_psi(self, psi: PsiParams):
        """Raise if a vertical abscissa at ``t = 1`` violates ``gamma > e^{1/beta1}``."""
        if self.shape == "vertical" and not self.gamma > math.exp(1.0 / psi.beta1):
            raise DomainError("gamma must exceed exp(1/beta1) for this Psi class")


DEFAULT_CONTOUR = ContourSpec()


def talbot_nodes(t, n):
    """Nodes ``z`` and weights ``w`` with ``f(t) ~ Re sum w * exp(z t) F(z)``.

    ``t`` may be an array; the result has shape ``t.shape + (n,)``.
    """
    t = np.asarray(t, dtype=float)
    theta = -np.pi + (np.arange(n) + 0.5) * (2 * np.pi / n)
    ct = _WT_C * theta
    cot = np.cos(ct) / np.sin(ct)
    zeta = _WT_A + _WT_B * theta * cot + 1j * _WT_D * theta
    dzeta = _WT_B * (cot - ct / np.sin(ct) ** 2) + 1j * _WT_D
    scale = (n / t)[..., None]
    z = scale * zeta
    w = scale * dzeta / (1j * n)
    return z, w


def _as_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("inverse Laplace transform needs t > 0")
    return t


def _invert_talbot(transform, t, contour):
    # the contour is symmetric about the real axis; for real originals
    # F(conj z) = conj F(z), but both halves are summed so the imaginary
    # part stays available as a diagnostic
    z, w = talbot_nodes(t, contour.n_nodes)
    terms = w * np.exp(z * t[..., None]) * transform(z)
    total = terms.sum(axis=-1)
    scale = np.abs(terms).max(axis=-1)
    tail = np.abs(terms[..., [0, -1]]).max(axis=-1)
    return total.real, total.imag, tail, scale


def _gauss_partial_sums(transform, t, contour, n_panels):
    x, w = np.polynomial.legendre.leggauss(contour.n_nodes)
    gam = contour.gamma / t
    half = np.pi / t
    # panel k covers Im z in [k*half, (k+1)*half]; the lower half line is the conjugate
    k = np.arange(n_panels)
    y = (k[:, None] + 0.5 * (x[None, :] + 1)) * half[..., None, None]
    z = gam[..., None, None] + 1j * y
    vals = np.exp(z * t[..., None, None]) * transform(z)
    panel = (vals * (0.5 * w)).sum(axis=-1) * half[..., None]
    # f = (1/pi) Re int_0^inf e^{zt}F dy; imaginary diagnostic from the conjugate half needs F(conj z)
    zc = np.conj(z)
    valsc = np.exp(zc * t[..., None, None]) * transform(zc)
    panelc = (valsc * (0.5 * w)).sum(axis=-1) * half[..., None]
    return np.cumsum((panel + panelc) / (2 * np.pi), axis=-1)


def wynn_epsilon(s):
    """Wynn epsilon acceleration of partial sums along the last axis.

    Returns the last two even-column estimates; their difference is a
    convergence diagnostic.
    """
    s = np.asarray(s, dtype=complex)
    n = s.shape[-1]
    prev = np.zeros(s.shape[:-1] + (n + 1,), dtype=complex)
    cur = np.concatenate([s, np.zeros(s.shape[:-1] + (1,), complex)], axis=-1)
    best = [s[..., -1], s[..., -1]]
    m = n
    col = 0
    while m > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = cur[..., 1:m] - cur[..., : m - 1]
            inv = np.where(np.abs(diff) > 0, 1.0 / np.where(diff == 0, 1, diff), np.inf)
        new = prev[..., 1:m] + inv
        prev, cur = cur, new
        m -= 1
        col += 1
        if col % 2 == 0:
            good = np.isfinite(cur[..., m - 1])
            best = [best[1], np.where(good, cur[..., m - 1], best[1])]
    return best[1], best[0]


def _invert_vertical(transform, t, contour):
    n_panels = max(4, int(math.ceil(contour.height_T / math.pi)))
    n_panels = min(n_panels, 48)
    sums = _gauss_partial_sums(transform, t, contour, n_panels)
    # the last panels alternate; feed the tail of the partial-sum sequence to the accelerator
    start = max(0, n_panels - 24)
    est, est_prev = wynn_epsilon(sums[..., start:])
    total = est
    tail = np.abs(est - est_prev)
    scale = np.abs(sums).max(axis=-1)
    return total.real, total.imag, tail, scale


def bromwich_invert(transform, t, contour=DEFAULT_CONTOUR, full_output=False, check=True):
    """Invert a Laplace transform at times ``t``.

    Parameters
    ----------
    transform : callable
        Vectorised map from a complex array ``z`` to ``F(z)`` of the same
        shape.  Extra leading dimensions are allowed in the output: a
        transform returning shape ``(..., *z.shape)`` is inverted for every
        leading index at once.
    t : float or array_like
        Positive times.
    contour : ContourSpec
    full_output : bool
        If true also return ``info`` with keys ``imag`` (imaginary part of
        the contour sum) and ``tail`` (end-panel contribution, or the
        accelerator disagreement on the vertical line).
    check : bool
        Raise :class:`AccuracyError` when the tail exceeds
        ``contour.tol`` times the size of the largest term.

    Returns
    -------
    value : float or ndarray
    info : dict, only with ``full_output``
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(_as_times(t))
    if contour.shape == "talbot":
        real, imag, tail, scale = _invert_talbot(transform, t, contour)
    else:
        real, imag, tail, scale = _invert_vertical(transform, t, contour)
    if check:
        if not (np.all(np.isfinite(real)) and np.all(np.isfinite(tail))):
            raise AccuracyError("contour sum is not finite", estimate=float("inf"))
        bad = tail > contour.tol * np.maximum(scale, 1e-300)
        if np.any(bad):
            worst = float(np.max(tail / np.maximum(scale, 1e-300)))
            raise AccuracyError(
                f"integrand does not decay along the contour (relative tail {worst:.3g})",
                estimate=worst,
            )
    if scalar:
        real, imag, tail = real[..., 0], imag[..., 0], tail[..., 0]
        real = real[()] if np.ndim(real) == 0 else real
    if full_output:
        return real, {"imag": imag, "tail": tail}
    return real


def kappa(mu: MuSpec, t, contour=DEFAULT_CONTOUR, full_output=False):
    """Kernel ``kappa(t)`` with Laplace transform ``1 / Phi(z)``."""
    return bromwich_invert(lambda z: 1.0 / eval_phi(mu, z), t, contour, full_output)


def kappa_primitives(mu: MuSpec, t, contour=DEFAULT_CONTOUR):
    """First and second primitives of ``kappa`` (transforms ``1/(z Phi)``, ``1/(z^2 Phi)``)."""
    return bromwich_invert(
        lambda z: np.stack([1.0 / (z * eval_phi(mu, z)), 1.0 / (z * z * eval_phi(mu, z))]),
        t,
        contour,
    )


def _exp_moments(z, h):
    """Integrals of ``e^{-z s}`` times the hat functions on a panel of length ``h``.

    With ``x = z h`` returns ``(a, b)`` such that
    ``int_0^h e^{-z s}(1 - s/h) ds = h * a`` and ``int_0^h e^{-z s} s/h ds = h * b``.
    """
    x = z * h
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    e = np.exp(-xs)
    em1 = -np.expm1(-xs)
    b = (em1 - xs * e) / xs**2
    a = (xs - em1) / xs**2
    # power series for tiny x
    a = np.where(small, 0.5 - x / 6 + x**2 / 24, a)
    b = np.where(small, 0.5 - x / 3 + x**2 / 8, b)
    return a, b


def _spline_body(t, u, z):
    """``int_0^T e^{-zt} S(t) dt`` for the not-a-knot cubic spline ``S`` of the data.

    On each panel ``S = sum_k c_k s^k`` and
    ``int_0^h e^{-zs} s^k ds = k! z^{-k-1} P(k+1, z h)`` with ``P`` the
    regularised lower incomplete gamma function, which stays accurate for
    small ``z h``.
    """
    cs = CubicSpline(t, u)
    c = cs.c[::-1]  # c[k, j]: coefficient of s^k on panel j
    h = np.diff(t)
    zz = z[..., None]
    acc = 0.0
    for k in range(4):
        acc = acc + c[k] * math.factorial(k) / zz ** (k + 1) * gammainc(k + 1, zz * h)
    return (np.exp(-zz * t[:-1]) * acc).sum(axis=-1)


def forward_laplace(series: TimeSeries, z, tail_policy="zero", full_output=False,
                    rule="trapezoid"):
    """Laplace transform of sampled data.

    With ``rule="trapezoid"`` the data are taken as piecewise linear
    between samples and each panel is integrated exactly against
    ``e^{-zt}`` (product trapezoid).  ``rule="spline"`` integrates the
    cubic spline interpolant exactly instead, which gains two orders for
    smooth data.  The part beyond the last sample is handled by
    ``tail_policy``:

    ``"zero"``
        Nothing is added.  A crude tail estimate ``|u(T)| e^{-zT} / z``
        is still reported, and an :class:`AccuracyWarning` is issued when
        it exceeds 1% of the integral.
    ``"exponential_fit"``
        A single exponential ``c e^{-r t}`` is fitted by least squares in
        ``log |u|`` to the last tenth of the window and its exact tail
        integral is added.  Falls back to a constant extrapolation if the
        fit does not decay.

    Returns
    -------
    value : float or ndarray
    tail : float or ndarray, only with ``full_output``
    """
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("forward_laplace needs z > 0")
    if tail_policy not in ("zero", "exponential_fit"):
        raise DomainError(f"unknown tail policy {tail_policy!r}")
    t, u = series.t, series.value
    if rule == "spline" and t.size >= 4:
        body = _spline_body(t, u, z)
    elif rule in ("trapezoid", "spline"):
        h = np.diff(t)
        zz = z[..., None]
        a, b = _exp_moments(zz, h)
        body = (np.exp(-zz * t[:-1]) * h * (a * u[:-1] + b * u[1:])).sum(axis=-1)
    else:
        raise DomainError(f"unknown quadrature rule {rule!r}")
    T = t[-1]
    if tail_policy == "zero":
        tail = np.abs(u[-1]) * np.exp(-z * T) / z
        value = body
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(body != 0, tail / np.abs(body), np.where(tail > 0, np.inf, 0.0))
        if np.any(rel > 0.01):
            warnings.warn(
                f"truncated Laplace tail is {float(np.max(rel)):.3g} of the integral",
                AccuracyWarning,
                stacklevel=2,
            )
    else:
        rate, amp = _fit_exponential_tail(t, u)
        tail = amp * np.exp(-z * T) / (z + rate)
        value = body + tail
    if full_output:
        return value, tail
    return value


def _fit_exponential_tail(t, u):
    T0 = t[0] + 0.9 * (t[-1] - t[0])
    sel = t >= T0
    if sel.sum() < 3 or np.any(u[sel] == 0) or np.any(np.sign(u[sel]) != np.sign(u[-1])):
        return 0.0, float(u[-1])
    slope, _ = np.polyfit(t[sel] - t[-1], np.log(np.abs(u[sel])), 1)
    rate = -slope
    if not rate > 0:
        return 0.0, float(u[-1])
    return float(rate), float(u[-1])


def contour_pair(contour, factor=2.0):
    """A contour with scaled abscissa, for contour-independence checks."""
    return replace(contour, gamma=contour.gamma * factor)
