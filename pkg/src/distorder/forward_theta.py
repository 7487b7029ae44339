r"""Fundamental solution, theta functions and the four-part representation.

With :math:`s = \Phi^{1/2}(z)` the transforms used here are

* fundamental solution :math:`\mathcal L G(x) = \frac{s}{2z} e^{-s|x|}`;
* theta function (image sum, :math:`0 \le \xi \le 2`)
  :math:`\mathcal L\theta(\xi) = \frac{s}{2z}
  \frac{e^{-\xi s} + e^{-(2-\xi)s}}{1 - e^{-2s}}`, extended evenly;
* boundary kernel :math:`\mathcal L\bar\theta(x) =
  \frac{e^{(x-2)s} - e^{-xs}}{2(1-e^{-2s})}` for :math:`0 < x < 1` and
  :math:`\frac{e^{xs} - e^{-(x+2)s}}{2(1-e^{-2s})}` for :math:`-1 < x < 0`.

All are written with decaying exponentials only, so they are stable for
large :math:`|s|`.

The solution of the problem with initial data ``u0``, boundary data
``g0``, ``g1`` and source ``f`` is ``u1 + u2 + u3 + u4``:

* ``u1`` integrates the theta kernel against ``u0`` in ``y``.  The
  y-integral is done in the Laplace domain before inversion.  Gauss-Legendre
  is split at the cusp ``y = x``.
* ``u2`` and ``u3`` are time convolutions of the boundary kernel against
  the boundary data.  On the boundary rows themselves the kernel has a jump,
  so those rows are Richardson-extrapolated from offsets of one and half a
  grid cell.
* ``u4`` convolves the kernel with transform ``(z / Phi) L theta`` in time
  against ``f`` and integrates in ``y`` with Simpson weights split at the
  cusp.  That kernel is the Green's function of ``Phi - d^2/dx^2`` with
  Dirichlet conditions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import CubicSpline

from .convolution import convolution_matrix, convolve
from .errors import AccuracyError, AccuracyWarning, DomainError
from .laplace import DEFAULT_CONTOUR, ContourSpec, bromwich_invert
from .mu_model import MuSpec, PsiParams, eval_phi, eval_phi_sqrt
from .series import Field1D, TimeSeries


@dataclass(frozen=True)
class ThetaConfig:
    """Theta-series settings.

    Parameters
    ----------
    m_max : int
        Largest image shell allowed when summing the theta series.
    contour : ContourSpec
    tail_tol : float
        Target for the analytic tail bound of the image series.
    """

    m_max: int = 50
    contour: ContourSpec = field(default_factory=lambda: DEFAULT_CONTOUR)
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.m_max < 1:
            raise DomainError("m_max must be at least 1")
        if not self.tail_tol > 0:
            raise DomainError("tail_tol must be positive")


def _pos_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive")
    return t


def _bshape(a, z):
    """Reshape the batch array ``a`` to broadcast against ``z``."""
    return a.reshape(a.shape + (1,) * z.ndim)


# -- transforms -------------------------------------------------------------


def g_transform(mu, x):
    x = np.abs(np.asarray(x, dtype=float))

    def F(z):
        s = eval_phi_sqrt(mu, z)
        return s / (2 * z) * np.exp(-s * _bshape(x, z))

    return F


def theta_transform(mu, xi, n_images=None):
    """``L theta(xi)``; closed image sum, or the partial sum ``|m| <= n_images``."""
    xi = np.abs(np.asarray(xi, dtype=float))
    if np.any(xi > 2):
        raise DomainError("theta transform needs |xi| <= 2")

    def F(z):
        s = eval_phi_sqrt(mu, z)
        X = _bshape(xi, z)
        if n_images is None:
            img = (np.exp(-X * s) + np.exp(-(2 - X) * s)) / (-np.expm1(-2 * s))
        else:
            img = sum(np.exp(-np.abs(X + 2 * m) * s) for m in range(-n_images, n_images + 1))
        return s / (2 * z) * img

    return F


def theta_bar_transform(mu, x):
    """Closed-form ``L theta_bar(x)`` for ``x`` in ``(-1, 0) U (0, 1)``.

    The endpoints ``x = +-1`` are also accepted; the transform vanishes there.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1) or np.any(x == 0):
        raise DomainError("theta_bar is defined for 0 < |x| <= 1 (flagged outside (-1, 1))")

    def F(z):
        s = eval_phi_sqrt(mu, z)
        X = _bshape(x, z)
        den = 2 * (-np.expm1(-2 * s))
        pos = (np.exp((X - 2) * s) - np.exp(-X * s)) / den
        neg = (np.exp(X * s) - np.exp(-(X + 2) * s)) / den
        return np.where(X > 0, pos, neg)

    return F


def green_transform(mu, xi):
    """``(z / Phi) L theta(xi)``: kernel of the source term."""
    th = theta_transform(mu, xi)

    def F(z):
        return th(z) * z / eval_phi(mu, z)

    return F


# -- pointwise kernels --------------------------------------------------------


def g_mu(mu: MuSpec, x, t, contour=DEFAULT_CONTOUR):
    """Fundamental solution ``G(x, t)`` for ``t > 0`` (symmetric in ``x``)."""
    t = _pos_times(t)
    return bromwich_invert(g_transform(mu, x), t, contour)


def g_mass(mu: MuSpec, t, half_width=3.0, n=400, contour=DEFAULT_CONTOUR):
    """``int_{-w}^{w} G(x, t) dx`` by Gauss-Legendre on geometric panels in ``|x|``."""
    edges = np.concatenate([[0.0], np.geomspace(1e-4 * half_width, half_width, 40)])
    q = max(4, n // 40)
    gx, gw = np.polynomial.legendre.leggauss(q)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (b - a) * (gx + 1) + a).ravel()
    w = (0.5 * (b - a) * gw).ravel()
    return 2.0 * float(w @ g_mu(mu, x, float(t), contour))


def _phi_lower_bound(mu, gamma, psi):
    """Lower bound of ``|Phi|`` on ``Re z = gamma``.

    With ``psi`` this is the analytic bound
    ``C (gamma^b1 - gamma^b0) / ln gamma``; otherwise the numerical minimum
    along the line.
    """
    if psi is not None:
        return psi.c_psi * (gamma**psi.beta1 - gamma**psi.beta0) / math.log(gamma)
    y = np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 400)]) * gamma
    return float(np.min(np.abs(eval_phi(mu, gamma + 1j * y))))


def theta_tail_bound(mu, t, n, psi=None, gamma=None):
    """Analytic bound on ``sum_{|m|>n} |G(x + 2m, t)|`` valid for all x in (0, 2).

    ``A C^(2n-2) J`` with ``C = exp(-(sqrt2/2) p)``, ``A = 2 / (1 - exp(-sqrt2 p))``,
    ``p`` a lower bound of ``|Phi^(1/2)|`` on the line ``Re z = gamma`` and
    ``J = e^{gamma t} / (2 pi) int |s / 2z| exp(-(sqrt2/2)|s|) |dz|``.

    Returns ``(bound, C)``.
    """
    if gamma is None:
        gamma = max(math.exp(1.0 / psi.beta1) + 0.5, 2.0) if psi is not None else 2.0
        gamma = max(gamma, 1.0 / t)
    p = math.sqrt(max(_phi_lower_bound(mu, gamma, psi), 0.0))
    if p == 0:
        return math.inf, 1.0
    C = math.exp(-math.sqrt(2) / 2 * p)
    A = 2.0 / (1.0 - math.exp(-math.sqrt(2) * p))

    def integrand(y):
        z = complex(gamma, y)
        s = np.sqrt(complex(eval_phi(mu, np.array([z]))[0]))
        return abs(s / (2 * z)) * math.exp(-math.sqrt(2) / 2 * abs(s))

    J, _ = quad(integrand, 0.0, np.inf, limit=200)
    J = 2 * J * math.exp(gamma * t) / (2 * math.pi)
    return A * C ** (2 * n - 2) * J, C


def theta(mu: MuSpec, x, t, cfg: ThetaConfig = ThetaConfig(), psi: PsiParams | None = None,
          full_output=False):
    """Theta function ``sum_m G(x + 2m, t)`` for ``x`` in ``(-2, 2)``, scalar ``t > 0``.

    The number of image shells ``N`` is the smallest for which the analytic
    tail bound drops below ``cfg.tail_tol``.
    """
    t = float(_pos_times(t))
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 2):
        raise DomainError("theta needs x in (-2, 2)")
    x = np.abs(x)
    # the bound is geometric in n with ratio C^2
    bound1, C = theta_tail_bound(mu, t, 1, psi)
    for n in range(1, cfg.m_max + 1):
        bound = bound1 * C ** (2 * n - 2)
        if bound < cfg.tail_tol:
            break
    else:
        raise AccuracyError(
            f"theta tail bound {bound:.3g} above {cfg.tail_tol:g} with m_max = {cfg.m_max}",
            estimate=bound,
        )
    shifts = np.arange(-n, n + 1)
    pts = x[..., None] + 2.0 * shifts
    val = g_mu(mu, pts, t, cfg.contour).sum(axis=-1)
    if full_output:
        return val, {"n_images": n, "tail_bound": bound, "C_gamma": C}
    return val


def theta_shells(mu, x, t, n, contour=DEFAULT_CONTOUR):
    """Contributions ``G(x + 2m) + G(x - 2m)`` of shells ``m = 1..n``."""
    m = np.arange(1, n + 1)
    g = g_mu(mu, np.stack([x + 2.0 * m, x - 2.0 * m]), float(t), contour)
    return g.sum(axis=0)


def theta_bar(mu: MuSpec, x, t, contour=DEFAULT_CONTOUR):
    """Boundary kernel ``theta_bar(x, t)`` from its closed-form transform."""
    t = _pos_times(t)
    return bromwich_invert(theta_bar_transform(mu, x), t, contour)


def theta_xt_series(mu, x, t, n_images, contour=DEFAULT_CONTOUR):
    """``d^2 theta / dt dx`` from the truncated image series, ``0 < x < 1``.

    Each image contributes ``-sign(x + 2m) (Phi / 2) exp(-s |x + 2m|)`` to the
    transform.
    """
    t = _pos_times(t)
    m = np.arange(-n_images, n_images + 1)
    xi = x + 2.0 * m

    def F(z):
        s = eval_phi_sqrt(mu, z)
        p = s * s
        terms = -np.sign(_bshape(xi, z)) * 0.5 * p * np.exp(-np.abs(_bshape(xi, z)) * s)
        return terms.sum(axis=0)

    return bromwich_invert(F, t, contour, check=False)


def theta_bar_composition(mu, x, t, n_images=8, n_grid=1000, contour=DEFAULT_CONTOUR):
    """``theta_bar(x, t)`` along the defining route ``I (d^2 theta / dt dx)``.

    The series kernel is tabulated in time on a graded grid and the operator
    ``I`` applied by product integration.  Slow; kept as a cross-check.
    """
    from .dode import apply_Imu

    grid = float(t) * (np.arange(n_grid + 1) / n_grid) ** 2
    q = np.zeros_like(grid)
    q[1:] = theta_xt_series(mu, x, grid[1:], n_images, contour)
    return float(apply_Imu(mu, TimeSeries(grid, q), contour).value[-1])


# -- representation solver -------------------------------------------------------


def boundary_convolution(mu, x, t_grid, psi_values, contour=DEFAULT_CONTOUR):
    """``int_0^t theta_bar(x, t - s) psi(s) ds`` on a grid starting at 0.

    ``x`` may be an array (batched). ``x = +-1`` gives zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape + (len(t_grid),))
    live = np.abs(x) < 1
    if np.any(live):
        out[live] = convolve(theta_bar_transform(mu, x[live]), t_grid, psi_values, contour)
    return out


def boundary_limit(mu, x0, side, t_grid, psi_values, eps, contour=DEFAULT_CONTOUR):
    """One-sided limit at ``x0`` of the boundary convolution, Richardson-extrapolated.

    The convolution is evaluated at ``x0 + side * eps`` and
    ``x0 + side * eps / 2`` and combined as ``2 U(eps/2) - U(eps)``, which
    cancels the error term that is linear in the offset.  ``x0 = 0`` with
    ``side = +1`` is the limit from the right; ``side = -1`` from the left.
    """
    xs = x0 + side * np.array([eps, eps / 2])
    U = boundary_convolution(mu, xs, t_grid, psi_values, contour)
    return 2 * U[1] - U[0]


def _values_on(data, grid, name):
    if data is None:
        return np.zeros_like(grid)
    if callable(data) and not isinstance(data, TimeSeries):
        return np.asarray(data(grid), dtype=float) * np.ones_like(grid)
    if isinstance(data, TimeSeries):
        if data.t.shape == grid.shape and np.allclose(data.t, grid, rtol=0, atol=1e-14):
            return data.value
        if data.t[0] > 0 or data.t[-1] < grid[-1] * (1 - 1e-12):
            raise DomainError(f"{name} does not cover the time grid")
        return data(grid)
    v = np.asarray(data, dtype=float)
    if v.shape != grid.shape:
        raise DomainError(f"{name} must be sampled on the time grid")
    return v


def _u1(mu, u0, x, t, contour, n_gauss=64):
    if callable(u0):
        fun = u0
    else:
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != x.shape:
            raise DomainError("u0 must be sampled on the x grid")
        if not np.any(u0):
            return np.zeros((t.size, x.size))
        fun = CubicSpline(x, u0)
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    out = np.zeros((t.size, x.size))
    tp = t[t > 0]
    for i, xi in enumerate(x):
        ys, ws = [], []
        for a, b in ((0.0, xi), (xi, 1.0)):
            if b > a:
                ys.append(0.5 * (b - a) * (gx + 1) + a)
                ws.append(0.5 * (b - a) * gw)
        y = np.concatenate(ys)
        w = np.concatenate(ws) * fun(y)
        pos = theta_transform(mu, xi - y)
        neg = theta_transform(mu, xi + y)

        def F(z, pos=pos, neg=neg, w=w):
            return np.tensordot(w, pos(z) - neg(z), axes=(0, 0))

        out[t > 0, i] = bromwich_invert(F, tp, contour)
    out[t == 0] = fun(x)
    return out


def _u4(mu, fv, x, t, contour):
    nx = x.size
    # distinct kernel offsets |x_i - y_k| and x_i + y_k
    diff = np.abs(x[:, None] - x[None, :])
    summ = x[:, None] + x[None, :]
    keys = np.round(np.concatenate([diff.ravel(), summ.ravel()]), 13)
    uniq, inv = np.unique(keys, return_inverse=True)
    W = convolution_matrix(green_transform(mu, uniq), t, contour)  # (nu, nt, nt)
    conv = np.einsum("uij,jk->uik", W, fv)  # every kernel against every y trace
    inv_d = inv[: nx * nx].reshape(nx, nx)
    inv_s = inv[nx * nx :].reshape(nx, nx)
    out = np.zeros((t.size, nx))
    for i in range(nx):
        w = _split_simpson_weights(x, i)
        k = np.arange(nx)
        kern = conv[inv_d[i], :, k] - conv[inv_s[i], :, k]  # (nx, nt)
        out[:, i] = w @ kern
    return out


def _split_simpson_weights(x, i):
    """Simpson weights on ``[0, x_i]`` and ``[x_i, 1]`` added together."""
    w = np.zeros_like(x)
    for sl in (slice(0, i + 1), slice(i, x.size)):
        xs = x[sl]
        if xs.size >= 2:
            w[sl] += simpson(np.eye(xs.size), x=xs, axis=-1)
    return w


def solve_representation(
    mu: MuSpec,
    u0,
    g0,
    g1,
    f,
    x_grid,
    t_grid,
    cfg: ThetaConfig = ThetaConfig(),
    full_output=False,
):
    """Solve the initial-boundary value problem by the theta representation.

    Parameters
    ----------
    u0 : array_like on ``x_grid``, callable or None
    g0, g1 : TimeSeries, array_like on ``t_grid``, callable or None
        Dirichlet data at ``x = 0`` and ``x = 1``.
    f : Field1D, callable ``f(X, T)`` or None
    x_grid : array_like
        Grid on ``[0, 1]`` including both ends.
    t_grid : array_like
        Grid starting at 0.

    Returns
    -------
    Field1D
        ``info["parts"]`` holds ``u1`` .. ``u4`` separately.
    """
    x = np.asarray(x_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if x.ndim != 1 or x.size < 3 or x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
        raise DomainError("x grid must increase strictly from 0 to 1")
    if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise DomainError("t grid must start at 0 and increase strictly")
    contour = cfg.contour
    g0v = _values_on(g0, t, "g0")
    g1v = _values_on(g1, t, "g1")
    u0v = u0 if (u0 is None or callable(u0)) else np.asarray(u0, dtype=float)

    warn = []
    u0_ends = (0.0, 0.0)
    if u0v is not None:
        u0_ends = (float(u0v(0.0)), float(u0v(1.0))) if callable(u0v) else (u0v[0], u0v[-1])
    if abs(u0_ends[0] - g0v[0]) > 1e-12 or abs(u0_ends[1] - g1v[0]) > 1e-12:
        msg = "corner data are inconsistent: u0 differs from the boundary data at t = 0"
        warn.append(msg)
        warnings.warn(msg, AccuracyWarning, stacklevel=2)

    parts = {}
    parts["u1"] = (
        np.zeros((t.size, x.size)) if u0v is None else _u1(mu, u0v, x, t, contour)
    )

    eps = x[1] - x[0]
    u2 = np.zeros((t.size, x.size))
    if np.any(g0v):
        u2[:, 1:] = -2 * boundary_convolution(mu, x[1:], t, g0v, contour).T
        u2[:, 0] = -2 * boundary_limit(mu, 0.0, +1, t, g0v, eps, contour)
    parts["u2"] = u2

    eps = x[-1] - x[-2]
    u3 = np.zeros((t.size, x.size))
    if np.any(g1v):
        u3[:, :-1] = 2 * boundary_convolution(mu, x[:-1] - 1.0, t, g1v, contour).T
        u3[:, -1] = 2 * boundary_limit(mu, 0.0, -1, t, g1v, eps, contour)
    parts["u3"] = u3

    if f is None:
        fv = None
    elif isinstance(f, Field1D):
        fv = f.values
    elif callable(f):
        X, T = np.meshgrid(x, t)
        fv = np.asarray(f(X, T), dtype=float) * np.ones_like(X)
    else:
        fv = np.asarray(f, dtype=float)
    if fv is not None and fv.shape != (t.size, x.size):
        raise DomainError("forcing must be sampled on (t_grid, x_grid)")
    parts["u4"] = (
        np.zeros((t.size, x.size)) if fv is None or not np.any(fv) else _u4(mu, fv, x, t, contour)
    )

    values = parts["u1"] + parts["u2"] + parts["u3"] + parts["u4"]
    info = {"method": "theta", "parts": parts, "warnings": warn}
    out = Field1D(x, t, values, info)
    return (out, info) if full_output else out
