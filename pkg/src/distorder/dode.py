r"""The distributed-order relaxation equation and the operators ``I`` and ``D``.

``solve_dode`` finds :math:`v` with :math:`D^{(\mu)} v = -\lambda v`,
:math:`v(0) = 1`, through the equivalent Volterra equation

.. math:: v = 1 - \lambda\,(\kappa * v),

where :math:`\kappa` has transform :math:`1/\Phi`.  The convolution is
discretised by product integration (see :mod:`distorder.convolution`) and
solved by Picard iteration on successive time windows.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .convolution import convolution_matrix
from .errors import DomainError, SolverError
from .laplace import DEFAULT_CONTOUR, bromwich_invert
from .mu_model import MuSpec, eta_primitive, eval_phi
from .series import TimeSeries

PICARD_TOL = 1e-12
PICARD_MAXITER = 60
CONTRACTION = 0.5


def _grid_of(grid):
    if isinstance(grid, TimeSeries):
        t = grid.t
    else:
        t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise DomainError("time grid must start at 0 and increase strictly")
    return t


def kappa_matrix(mu: MuSpec, t, contour=DEFAULT_CONTOUR):
    """Product-integration matrix of ``phi -> kappa * phi``."""
    return convolution_matrix(lambda z: 1.0 / eval_phi(mu, z), t, contour)


def _windows(M):
    """Split rows into windows where Jacobi sweeps contract by ``CONTRACTION``.

    ``M = lam * W``.  Within a window the iteration is
    ``v <- (b - L v) / (1 + diag)``, whose max-norm rate is the largest row
    sum of ``|L| / (1 + diag)`` restricted to the window.
    """
    n = M.shape[0]
    diag = np.diag(M)
    bounds = [1]
    start = 1
    for i in range(1, n):
        rate = np.abs(M[i, start:i]).sum() / (1.0 + diag[i])
        if rate > CONTRACTION and i > start:
            bounds.append(i)
            start = i
    bounds.append(n)
    return list(zip(bounds[:-1], bounds[1:]))


def picard_solve(M, rhs, tol=PICARD_TOL, maxiter=PICARD_MAXITER):
    """Solve ``(I + M) v = rhs`` for lower-triangular ``M`` by windowed Picard.

    Returns the solution and a list of per-window iteration counts.
    """
    v = np.array(rhs, dtype=float)
    diag = np.diag(M)
    counts = []
    for a, b in _windows(M):
        past = M[a:b, :a] @ v[:a]
        Mw = M[a:b, a:b]
        Lw = Mw - np.diag(np.diag(Mw))
        d = 1.0 + diag[a:b]
        w = v[a:b].copy()
        for it in range(1, maxiter + 1):
            new = (rhs[a:b] - past - Lw @ w) / d
            delta = np.max(np.abs(new - w))
            w = new
            if delta <= tol * max(1.0, np.max(np.abs(w))):
                break
        else:
            raise SolverError(
                f"Picard iteration stalled on window [{a}, {b}) after {maxiter} sweeps "
                f"(last update {delta:.3g})"
            )
        v[a:b] = w
        counts.append(it)
    return v, counts


def solve_dode(mu: MuSpec, lam, grid, method="volterra", contour=DEFAULT_CONTOUR, full_output=False):
    """Relaxation profile ``v`` with ``D v = -lam v``, ``v(0) = 1``.

    Parameters
    ----------
    mu : MuSpec
    lam : float
        Positive rate.
    grid : array_like or TimeSeries
        Times starting at 0; graded grids resolve the initial layer.
    method : {"volterra", "laplace"}
        ``"volterra"`` is the product-integration / Picard solver.
        ``"laplace"`` inverts the closed form ``Phi / (z (Phi + lam))``
        directly and is used as a cross-check and for stiff modes.

    Returns
    -------
    TimeSeries, and with ``full_output`` a dict of diagnostics.
    """
    if not lam > 0:
        raise DomainError("lam must be positive")
    t = _grid_of(grid)
    info = {"method": method}
    if method == "laplace":
        v = np.empty_like(t)
        v[0] = 1.0
        v[1:] = bromwich_invert(lambda z: _relax_transform(mu, lam, z), t[1:], contour)
    elif method == "volterra":
        M = lam * kappa_matrix(mu, t, contour)
        if not np.all(np.isfinite(M)):
            raise SolverError("kappa could not be integrated on this grid")
        v, counts = picard_solve(M, np.ones_like(t))
        info["windows"] = len(counts)
        info["iterations"] = counts
    else:
        raise DomainError(f"unknown method {method!r}")
    out = TimeSeries(t, v)
    return (out, info) if full_output else out


def _relax_transform(mu, lam, z):
    p = eval_phi(mu, z)
    return p / (z * (p + lam))


def relaxation_transforms(mu: MuSpec, lam):
    """Transforms of ``u_n`` and of ``I u_n`` for rates ``lam`` (array allowed)."""
    lam = np.asarray(lam, dtype=float)

    def un(z):
        p = eval_phi(mu, z)
        return p / (z * (p + lam.reshape(lam.shape + (1,) * z.ndim)))

    def iun(z):
        p = eval_phi(mu, z)
        return 1.0 / (z * (p + lam.reshape(lam.shape + (1,) * z.ndim)))

    return un, iun


def apply_Imu(mu: MuSpec, phi: TimeSeries, contour=DEFAULT_CONTOUR):
    """``(kappa * phi)(t)`` by product integration; needs ``phi.t[0] == 0``."""
    t = _grid_of(phi.t)
    W = kappa_matrix(mu, t, contour)
    return TimeSeries(t, W @ phi.value)


def dmu_matrix(mu: MuSpec, t):
    """Matrix of ``phi -> D phi`` by L1-2 product quadrature.

    On panel ``[t_j, t_{j+1}]`` with ``j >= 1`` ``phi`` is interpolated by
    the quadratic through ``t_{j-1}, t_j, t_{j+1}``; the first panel uses
    the quadratic through ``t_0, t_1, t_2``.  The derivative of that quadratic is linear
    in ``s`` and is integrated exactly against ``eta`` using its first two
    primitives ``H1``, ``H2``.  Quadratic data are therefore differentiated
    exactly.
    """
    t = _grid_of(t)
    n = t.size
    if n < 3:
        raise DomainError("the derivative scheme needs at least three samples")
    h = np.diff(t)
    tau = np.maximum(t[:, None] - t[None, :], 0.0)
    H1 = eta_primitive(mu, tau)
    H2 = eta_primitive(mu, tau, order=2)
    ta, tb = tau[:, :-1], tau[:, 1:]
    dH1 = H1[:, :-1] - H1[:, 1:]
    # int_panel eta(t_i - s) (2 s - t_j - t_{j+1}) ds
    Q = (ta + tb) * dH1 - 2 * (ta * H1[:, :-1] - tb * H1[:, 1:]) + 2 * (H2[:, :-1] - H2[:, 1:])
    mask = np.tril(np.ones((n, n - 1), bool), -1)
    dH1 = np.where(mask, dH1, 0.0)
    Q = np.where(mask, Q, 0.0)
    # first divided differences d1_j = (phi_{j+1} - phi_j) / h_j
    S1 = sparse.diags([-1 / h, 1 / h], [0, 1], shape=(n - 1, n))
    # second divided differences on (j-1, j, j+1); the first panel borrows (0, 1, 2)
    inv_span = np.zeros(n - 1)
    inv_span[1:] = 1.0 / (t[2:] - t[:-2])
    Dd = sparse.diags([-inv_span[1:], inv_span], [-1, 0], shape=(n - 1, n - 1)).tolil()
    Dd[0, 0] = -1.0 / (t[2] - t[0])
    Dd[0, 1] = 1.0 / (t[2] - t[0])
    S2 = Dd.tocsr() @ S1
    return np.asarray((S1.T @ dH1.T).T + (S2.T @ Q.T).T)


def apply_Dmu(mu: MuSpec, phi: TimeSeries):
    """Caputo-type distributed derivative of sampled data (L1-2 product quadrature)."""
    if len(phi) < 3:
        raise DomainError("apply_Dmu needs at least three samples")
    t = _grid_of(phi.t)
    return TimeSeries(t, dmu_matrix(mu, t) @ phi.value)
