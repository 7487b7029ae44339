r"""Eigenfunction-series solver for the distributed-order diffusion problem.

For :math:`D^{(\mu)}u - \mathcal L u = f` on :math:`(0,1)` with
homogeneous Dirichlet data and eigenpairs :math:`(\lambda_n, \psi_n)` of
:math:`-\mathcal L`,

.. math::

    u(x,t) = \sum_n \Big[\langle u_0,\psi_n\rangle u_n(t)
        + \langle f(\cdot,0),\psi_n\rangle (I u_n)(t)
        + \int_0^t \langle \partial_t f(\cdot,\tau),\psi_n\rangle
          (I u_n)(t-\tau)\,d\tau\Big]\psi_n(x),

with :math:`u_n` the relaxation profile of rate :math:`\lambda_n`.  The two
forcing terms together equal :math:`\frac{d}{dt}[(I u_n) * f_n]`, a
convolution of :math:`f_n` against the kernel with transform
:math:`1/(\Phi + \lambda_n)`, which is how they are evaluated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .convolution import convolution_matrix
from .dode import dmu_matrix
from .errors import AccuracyError, DomainError
from .laplace import DEFAULT_CONTOUR, bromwich_invert
from .mu_model import MuSpec, dumps_json, eval_phi
from .series import Field1D, atomic_write_text

DEFAULT_MODES = 64


def trapezoid_weights(x):
    """Composite trapezoid weights on the grid ``x``."""
    x = np.asarray(x, dtype=float)
    w = np.zeros_like(x)
    h = np.diff(x)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of ``-L`` sampled on an x-grid.

    ``functions[n]`` holds ``psi_n`` at ``x``.  Orthonormality is checked
    in the discrete inner product ``<u, v> = sum w_i u_i v_i`` with
    trapezoid weights ``w``.
    """

    eigenvalues: np.ndarray
    x: np.ndarray
    functions: np.ndarray
    gram_tol: float = 1e-8

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        x = np.asarray(self.x, dtype=float)
        psi = np.atleast_2d(np.asarray(self.functions, dtype=float))
        if psi.shape != (lam.size, x.size):
            raise DomainError("eigenfunctions must have shape (n_modes, len(x))")
        if lam.size < 1 or lam[0] <= 0 or np.any(np.diff(lam) < 0):
            raise DomainError("eigenvalues must be positive and nondecreasing")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "functions", psi)
        err = np.max(np.abs(self.gram() - np.eye(lam.size)))
        if err > self.gram_tol:
            raise DomainError(f"eigenfunctions are not orthonormal (Gram error {err:.3g})")

    @property
    def n_modes(self):
        return self.eigenvalues.size

    @property
    def weights(self):
        return trapezoid_weights(self.x)

    def gram(self):
        return (self.functions * self.weights) @ self.functions.T

    def project(self, values):
        """Coefficients ``<v, psi_n>`` for samples on ``x`` (last axis)."""
        return np.asarray(values, dtype=float) @ (self.functions * self.weights).T

    def truncate(self, n):
        return EigenSystem(self.eigenvalues[:n], self.x, self.functions[:n], self.gram_tol)

    def to_json(self, path):
        text = dumps_json(
            {
                "eigenvalues": self.eigenvalues.tolist(),
                "x": self.x.tolist(),
                "eigenfunctions": self.functions.tolist(),
            }
        )
        atomic_write_text(path, text)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            d = json.load(fh)
        return cls(np.array(d["eigenvalues"]), np.array(d["x"]), np.array(d["eigenfunctions"]))


def dirichlet_laplacian_eigs(n_modes, x_grid):
    """``lambda_n = (n pi)^2``, ``psi_n = sqrt(2) sin(n pi x)`` for ``n = 1..n_modes``.

    On a uniform grid with ``N`` intervals the sampled sines are exactly
    orthonormal under the trapezoid rule for ``n < N``; more modes are
    aliased and rejected.
    """
    if n_modes < 1:
        raise DomainError("n_modes must be at least 1")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x[0] != 0.0 or x[-1] != 1.0:
        raise DomainError("x grid must run from 0 to 1")
    n = np.arange(1, int(n_modes) + 1)
    psi = np.sqrt(2.0) * np.sin(np.pi * n[:, None] * x[None, :])
    return EigenSystem((n * np.pi) ** 2, x, psi)


def max_modes(x_grid):
    """Largest mode count that stays orthonormal on ``x_grid``."""
    return len(x_grid) - 2


def _mode_transforms(mu, lam):
    lam = np.asarray(lam, dtype=float)

    def shape(z):
        return lam.reshape(lam.shape + (1,) * z.ndim)

    def relax(z):
        p = eval_phi(mu, z)
        return p / (z * (p + shape(z)))

    def forcing(z):
        return 1.0 / (eval_phi(mu, z) + shape(z))

    return relax, forcing


def solve_spectral(
    mu: MuSpec,
    u0,
    f,
    eigs: EigenSystem,
    t_grid,
    n_modes=None,
    contour=DEFAULT_CONTOUR,
    coef_tol=1e-2,
    full_output=False,
):
    """Truncated eigenfunction series solution on ``eigs.x`` and ``t_grid``.

    Parameters
    ----------
    mu : MuSpec
    u0 : array_like or callable or None
        Initial data on ``eigs.x`` (or a function of x).
    f : Field1D or callable or None
        Forcing on ``eigs.x`` and ``t_grid``; a callable takes ``(X, T)``.
    eigs : EigenSystem
    t_grid : array_like
        Times starting at 0.
    n_modes : int, optional
        Defaults to ``min(DEFAULT_MODES, eigs.n_modes)``.
    coef_tol : float
        If the largest coefficient among the last quarter of modes exceeds
        this fraction of the largest coefficient overall, the data are not
        resolved by the basis and :class:`AccuracyError` is raised.

    Returns
    -------
    Field1D
        ``info`` holds ``tail`` (largest contribution of the last mode) and
        ``n_modes``.
    """
    x = eigs.x
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise DomainError("t grid must start at 0 and increase strictly")
    n = min(DEFAULT_MODES, eigs.n_modes) if n_modes is None else int(n_modes)
    if not 1 <= n <= eigs.n_modes:
        raise DomainError(f"n_modes must lie in [1, {eigs.n_modes}]")
    E = eigs.truncate(n)
    lam = E.eigenvalues

    u0v = np.zeros_like(x) if u0 is None else (u0(x) if callable(u0) else np.asarray(u0, float))
    if u0v.shape != x.shape:
        raise DomainError("u0 must be sampled on the eigenfunction grid")
    if f is None:
        fv = None
    elif callable(f):
        X, T = np.meshgrid(x, t)
        fv = np.asarray(f(X, T), dtype=float) * np.ones_like(X)
    else:
        fv = f.values if isinstance(f, Field1D) else np.asarray(f, dtype=float)
        if fv.shape != (t.size, x.size):
            raise DomainError("forcing must be sampled on (t_grid, x)")

    relax, forcing = _mode_transforms(mu, lam)
    c = E.project(u0v)
    coef = np.zeros((t.size, n))
    tail_parts = []
    if np.any(c != 0):
        _check_decay(c, coef_tol, "initial data")
        un = np.ones((n, t.size))
        un[:, 1:] = bromwich_invert(relax, t[1:], contour)
        coef += (c[:, None] * un).T
        tail_parts.append(np.abs(c[-1] * un[-1]).max())
    if fv is not None and np.any(fv != 0):
        fn = E.project(fv)  # (nt, n)
        _check_decay(np.abs(fn).max(axis=0), coef_tol, "forcing")
        W = convolution_matrix(forcing, t, contour)  # (n, nt, nt)
        add = np.einsum("nij,jn->in", W, fn)
        coef += add
        tail_parts.append(np.abs(add[:, -1]).max())
    values = coef @ E.functions
    tail = float(max(tail_parts)) if tail_parts else 0.0
    info = {"n_modes": n, "tail": tail, "method": "spectral"}
    out = Field1D(x, t, values, info)
    return (out, info) if full_output else out


def _check_decay(c, tol, what):
    c = np.abs(np.asarray(c))
    top = c.max()
    q = max(1, c.size // 4)
    if c.size >= 8 and top > 0 and c[-q:].max() > tol * top:
        raise AccuracyError(
            f"{what} is not resolved by the eigenbasis: trailing coefficients "
            f"reach {c[-q:].max() / top:.3g} of the leading one",
            estimate=float(c[-q:].max() / top),
        )


def second_difference(values, x):
    """Three-point second difference along the last axis at interior nodes."""
    x = np.asarray(x, dtype=float)
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    u = np.asarray(values)
    return 2 * (
        u[..., :-2] / (hl * (hl + hr)) - u[..., 1:-1] / (hl * hr) + u[..., 2:] / (hr * (hl + hr))
    )


def residual(mu: MuSpec, field: Field1D, f=None):
    """Max-norm PDE defect ``|D u - u_xx - f|`` over interior nodes and ``t > 0``.

    ``D`` is the L1-2 product quadrature of :func:`distorder.dode.dmu_matrix`
    along each x-trace and ``u_xx`` the three-point second difference.
    """
    if field.x.size - 2 < 5:
        raise DomainError("residual needs at least 5 interior x nodes")
    if field.t.size < 3:
        raise DomainError("residual needs at least 3 time levels")
    u = field.values
    Du = dmu_matrix(mu, field.t) @ u  # (nt, nx)
    lap = second_difference(u, field.x)
    if f is None:
        fv = 0.0
    elif callable(f):
        X, T = np.meshgrid(field.x, field.t)
        fv = np.asarray(f(X, T))[:, 1:-1]
    else:
        fv = (f.values if isinstance(f, Field1D) else np.asarray(f))[:, 1:-1]
    r = Du[:, 1:-1] - lap - fv
    return float(np.max(np.abs(r[1:])))
