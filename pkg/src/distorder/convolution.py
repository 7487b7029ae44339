r"""Product integration of causal convolutions with Laplace-specified kernels.

For a kernel :math:`k` known through its transform :math:`K(z)` and data
:math:`\varphi` that is piecewise linear on a grid :math:`t_0 = 0 < t_1 <
\dots`, the matrix :math:`W` with

.. math:: \int_0^{t_i} k(t_i - s)\,\varphi(s)\,ds = \sum_j W_{ij}\varphi_j

is assembled panel by panel.

*Near panels* (distance to ``t_i`` below ``near`` panel widths) use exact
moments built from the primitives :math:`K_1 = \mathcal L^{-1}[K/z]` and
:math:`K_2 = \mathcal L^{-1}[K/z^2]`.  No pointwise kernel values are
needed there, so weakly singular kernels (logarithmic, power-law) and even
kernels with a point mass at the origin are integrated exactly.

*Far panels* use Gauss-Legendre with kernel values :math:`k(\tau)` read
from a log-spaced table (cubic spline of :math:`\tau k(\tau)` in
:math:`\ln\tau`).  There the kernel is smooth on the scale of the panel.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError
from .laplace import DEFAULT_CONTOUR, bromwich_invert


def _check_grid(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise DomainError("convolution grid must start at 0 and increase strictly")
    return t


class KernelTable:
    """Pointwise values of ``k = L^{-1}[K]`` on ``[tau_min, tau_max]``.

    Uses direct inversion for few points and a spline on a log grid
    otherwise.
    """

    def __init__(self, transform, tau_min, tau_max, contour=DEFAULT_CONTOUR, per_decade=96):
        self.transform = transform
        self.contour = contour
        self.tau_min = float(tau_min)
        self.tau_max = float(tau_max)
        decades = max(np.log10(self.tau_max / self.tau_min), 1e-3)
        n = int(np.ceil(decades * per_decade)) + 8
        self.log_tau = np.linspace(np.log(self.tau_min) - 0.05, np.log(self.tau_max) + 0.05, n)
        tau = np.exp(self.log_tau)
        vals = bromwich_invert(transform, tau, contour, check=False)
        # batch dimensions live in front; spline along the last axis
        self._spline = CubicSpline(self.log_tau, tau * vals, axis=-1)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self._spline(np.log(tau)) / tau


def _primitives(transform, tau, contour):
    # K1 and K2 at tau > 0 in one contour sweep; K1(0) = K2(0) = 0
    def both(z):
        k = transform(z)
        return np.stack([k / z, k / (z * z)])

    out = bromwich_invert(both, tau, contour, check=False)
    return out[0], out[1]


def convolution_matrix(
    transform,
    t,
    contour=DEFAULT_CONTOUR,
    near=10,
    gauss=6,
    per_decade=96,
    direct_limit=4000,
):
    """Weight matrix of ``phi -> (k * phi)(t_i)`` for piecewise-linear ``phi``.

    Parameters
    ----------
    transform : callable
        ``K(z)``, vectorised.  May return extra leading dimensions, in which
        case one matrix per leading index is returned.
    t : array_like
        Grid starting at 0.
    near : int
        Panels whose far end lies within ``near`` panel widths of ``t_i``
        are integrated with exact moments.
    gauss : int
        Gauss-Legendre points on far panels.

    Returns
    -------
    ndarray
        Shape ``batch + (n, n)``, lower triangular, with zero first row.
    """
    t = _check_grid(t)
    n = t.size
    h = np.diff(t)
    I, J = np.tril_indices(n, -1)  # panel J spans [t_J, t_{J+1}], row I > J
    tau_a = t[I] - t[J]
    tau_b = t[I] - t[J + 1]
    is_near = tau_b < near * h[J]

    # exact moments on near panels
    iN, jN = I[is_near], J[is_near]
    ta, tb, hN = tau_a[is_near], tau_b[is_near], h[jN]
    uniq, inv = np.unique(np.concatenate([ta, tb]), return_inverse=True)
    pos = uniq > 0
    probe = np.asarray(transform(np.array([1.0 + 0j])))
    batch = probe.shape[:-1]
    K1 = np.zeros(batch + uniq.shape)
    K2 = np.zeros(batch + uniq.shape)
    if np.any(pos):
        K1[..., pos], K2[..., pos] = _primitives(transform, uniq[pos], contour)
    K1a, K1b = K1[..., inv[: ta.size]], K1[..., inv[ta.size :]]
    K2a, K2b = K2[..., inv[: ta.size]], K2[..., inv[ta.size :]]
    A = K1a - K1b
    B = -hN * K1b + K2a - K2b
    W = np.zeros(batch + (n, n))
    np.add.at(W, (..., iN, jN), A - B / hN)
    np.add.at(W, (..., iN, jN + 1), B / hN)

    far = ~is_near
    if np.any(far):
        iF, jF = I[far], J[far]
        x, w = np.polynomial.legendre.leggauss(gauss)
        lam = 0.5 * (x + 1)  # position in the panel, 0 at t_j
        hF = h[jF]
        tau = (t[iF] - t[jF])[:, None] - lam[None, :] * hF[:, None]
        flat = tau.ravel()
        uniq_tau, inv_tau = np.unique(flat, return_inverse=True)
        if uniq_tau.size <= direct_limit:
            kv = bromwich_invert(transform, uniq_tau, contour, check=False)
        else:
            table = KernelTable(transform, uniq_tau[0], uniq_tau[-1], contour, per_decade)
            kv = table(uniq_tau)
        kv = kv[..., inv_tau].reshape(batch + tau.shape)
        wk = kv * (0.5 * w) * hF[:, None]
        np.add.at(W, (..., iF, jF), (wk * (1 - lam)).sum(axis=-1))
        np.add.at(W, (..., iF, jF + 1), (wk * lam).sum(axis=-1))
    return W


def convolve(transform, t, phi, contour=DEFAULT_CONTOUR, **kw):
    """``(k * phi)(t_i)`` for samples ``phi`` on the grid ``t`` (last axis)."""
    W = convolution_matrix(transform, t, contour, **kw)
    return np.einsum("...ij,...j->...i", W, np.asarray(phi, dtype=float))
