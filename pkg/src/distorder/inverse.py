r"""Recovery of the weight :math:`\mu` from an interior trace or a boundary flux.

With ``u0 = g1 = f = 0`` and boundary input ``g0`` the Laplace transforms
of the measured data satisfy, with :math:`s = \Phi^{1/2}(z)`,

.. math::

    \frac{\mathcal L[u(x_0,\cdot)](z)}{-2\,\mathcal L g_0(z)} = F(s; x_0),
    \qquad
    \frac{\mathcal L[u_x(x^\star,\cdot)](z)}{-2\,\mathcal L g_0(z)} = F_f(s; x^\star).

``F`` is strictly increasing and ``F_f`` strictly decreasing beyond explicit
thresholds.  So once every sample ``z_k`` is large enough that ``s`` lies
past the threshold for all weights in the prior class, ``Phi(z_k)`` is read
off by a scalar inversion.  The weight is then rebuilt from the moments
:math:`\Phi(z_k) = \int_0^1 \mu(\alpha) z_k^\alpha\,d\alpha` by regularised
nonnegative least squares.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, nnls

from .errors import ConditioningError, DomainError, ExcitationError, RangeError
from .forward_theta import boundary_convolution
from .laplace import DEFAULT_CONTOUR, forward_laplace
from .mu_model import MuSpec, PsiParams, dumps_json
from .series import TimeSeries, atomic_write_text, graded_grid, read_timeseries_csv

KINDS = ("interior", "flux")


# -- the two monotone maps --------------------------------------------------------


def F_interior(y, x0):
    """``(e^{(x0-2)y} - e^{-x0 y}) / (2 (1 - e^{-2y}))`` for ``y > 0``."""
    y = np.asarray(y, dtype=float)
    return (np.exp((x0 - 2) * y) - np.exp(-x0 * y)) / (-2 * np.expm1(-2 * y))


def F_flux(y, xs):
    """``y (e^{(xs-2)y} + e^{-xs y}) / (2 (1 - e^{-2y}))`` for ``y > 0``."""
    y = np.asarray(y, dtype=float)
    return y * (np.exp((xs - 2) * y) + np.exp(-xs * y)) / (-2 * np.expm1(-2 * y))


def _check_probe(probe, kind):
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}")
    if kind == "interior" and not 0 < probe < 1:
        raise DomainError("interior probe must lie in (0, 1)")
    if kind == "flux" and not 0 < probe <= 1:
        raise DomainError("flux probe must lie in (0, 1]")


def monotonicity_threshold(probe, kind):
    """Left end of the interval on which ``F`` (or ``F_f``) is strictly monotone."""
    _check_probe(probe, kind)
    if kind == "interior":
        return math.log((2 - probe) / probe) / (2 * (1 - probe))
    return 1.0 / probe


def _map(kind):
    return F_interior if kind == "interior" else F_flux


def attainable_range(probe, kind):
    """Open interval of values taken on the monotone branch."""
    y0 = monotonicity_threshold(probe, kind)
    v0 = float(_map(kind)(y0, probe))
    return (v0, 0.0) if kind == "interior" else (0.0, v0)


def invert_F(target, probe, kind="interior"):
    """The unique ``y`` past the monotonicity threshold with ``F(y; probe) = target``.

    Raises
    ------
    RangeError
        If ``target`` is outside the open range of the monotone branch.
    """
    y0 = monotonicity_threshold(probe, kind)
    lo, hi = attainable_range(probe, kind)
    if not lo < target < hi:
        raise RangeError(
            f"target {target:.17g} outside the attainable interval ({lo:.6g}, {hi:.6g})",
            interval=(lo, hi),
        )
    F = _map(kind)
    g = lambda y: float(F(y, probe)) - target  # noqa: E731
    a, b = y0, 2 * y0 + 1
    while g(a) * g(b) > 0:
        a, b = b, 2 * b
        if b > 1e6:
            raise RangeError("target too close to the limit at infinity", interval=(lo, hi))
    return brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


# -- sample points ---------------------------------------------------------------


def phi_lower_bound_real(psi: PsiParams, z):
    """``int_{beta0}^{beta1} C z^alpha dalpha``, the smallest ``Phi(z)`` over the class."""
    z = np.asarray(z, dtype=float)
    lz = np.log(z)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = psi.c_psi * (z**psi.beta1 - z**psi.beta0) / lz
    # removable singularity at z = 1
    return np.where(lz == 0, psi.c_psi * (psi.beta1 - psi.beta0), val)


def critical_N(psi: PsiParams, probe, kind):
    """Smallest integer ``N >= 2`` with ``C (N^b1 - N^b0) / ln N`` above the threshold squared."""
    thr = monotonicity_threshold(probe, kind) ** 2
    n = 2
    while phi_lower_bound_real(psi, n) <= thr:
        n += 1
    return n


def choose_sample_points(psi: PsiParams, probe, kind, count, spacing="arithmetic", ratio=None):
    """Sample abscissae all beyond the worst-case monotonicity threshold.

    ``spacing="arithmetic"`` returns ``k N*`` for ``k = 1..count``; geometric
    spacing returns ``N* r^(k-1)`` with ``r`` defaulting to ``count^(1/(count-1))``
    so both choices span the same range.
    """
    if count < 1:
        raise DomainError("count must be at least 1")
    n = critical_N(psi, probe, kind)
    if spacing == "arithmetic":
        return n * np.arange(1, count + 1, dtype=float)
    if spacing == "geometric":
        if count == 1:
            return np.array([float(n)])
        r = count ** (1.0 / (count - 1)) if ratio is None else float(ratio)
        return n * r ** np.arange(count, dtype=float)
    raise DomainError(f"unknown spacing {spacing!r}")


# -- problem and sample containers ---------------------------------------------------


def _series_from_json(obj, base):
    if isinstance(obj, str):
        path = obj if os.path.isabs(obj) else os.path.join(base, obj)
        return read_timeseries_csv(path)
    return TimeSeries(np.asarray(obj["t"], float), np.asarray(obj["value"], float))


@dataclass
class InverseProblemSpec:
    """Everything needed to turn a measured trace into ``Phi`` samples."""

    kind: str
    probe: float
    data: TimeSeries
    g0: TimeSeries
    psi: PsiParams
    z_samples: np.ndarray = None
    reg_weight: float = 1e-8
    alpha_grid: np.ndarray = field(default_factory=lambda: np.linspace(0, 1, 21))
    tail_policy: str = "exponential_fit"
    rule: str = "spline"

    def __post_init__(self):
        _check_probe(self.probe, self.kind)
        if self.z_samples is None:
            self.z_samples = choose_sample_points(self.psi, self.probe, self.kind, 40)
        z = np.asarray(self.z_samples, dtype=float)
        if z.ndim != 1 or z.size < 1 or np.any(np.diff(z) <= 0):
            raise DomainError("z_samples must be strictly increasing")
        thr = monotonicity_threshold(self.probe, self.kind) ** 2
        if np.any(phi_lower_bound_real(self.psi, z) <= thr):
            raise DomainError("some z_samples lie below the monotonicity threshold for this class")
        self.z_samples = z
        if self.reg_weight < 0:
            raise DomainError("reg_weight must be nonnegative")
        if abs(self.data.t[-1] - self.g0.t[-1]) > 1e-9 * max(1.0, self.g0.t[-1]):
            raise DomainError("data and g0 must share a time window")
        self.alpha_grid = np.asarray(self.alpha_grid, dtype=float)

    def to_dict(self):
        return {
            "kind": self.kind,
            "probe": self.probe,
            "data": {"t": self.data.t.tolist(), "value": self.data.value.tolist()},
            "g0": {"t": self.g0.t.tolist(), "value": self.g0.value.tolist()},
            "psi": self.psi.to_dict(),
            "z_samples": self.z_samples.tolist(),
            "reg_weight": self.reg_weight,
            "alpha_grid": self.alpha_grid.tolist(),
            "tail_policy": self.tail_policy,
            "rule": self.rule,
        }

    @classmethod
    def from_dict(cls, d, base="."):
        return cls(
            kind=d["kind"],
            probe=float(d["probe"]),
            data=_series_from_json(d["data"], base),
            g0=_series_from_json(d["g0"], base),
            psi=PsiParams.from_dict(d["psi"]),
            z_samples=None if d.get("z_samples") is None else np.asarray(d["z_samples"], float),
            reg_weight=float(d.get("reg_weight", 1e-8)),
            alpha_grid=np.asarray(d.get("alpha_grid", np.linspace(0, 1, 21)), float),
            tail_policy=d.get("tail_policy", "exponential_fit"),
            rule=d.get("rule", "spline"),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh), os.path.dirname(os.path.abspath(path)))

    def to_json(self, path):
        atomic_write_text(path, dumps_json(self.to_dict()))


@dataclass
class PhiSampleSet:
    """Pairs ``(z_k, Phi(z_k))`` and their per-sample diagnostics."""

    z: np.ndarray
    phi: np.ndarray
    d: np.ndarray = None
    g: np.ndarray = None
    tail: np.ndarray = None
    f_residual: np.ndarray = None
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.z.shape != self.phi.shape or self.z.ndim != 1:
            raise DomainError("z and phi must be 1-D of equal length")
        if np.any(self.phi <= 0):
            raise DomainError("phi samples must be positive")
        n = self.z.size
        for name in ("d", "g", "tail", "f_residual"):
            if getattr(self, name) is None:
                setattr(self, name, np.full(n, np.nan))
        if np.any(np.diff(self.phi) < 0):
            self.flags.append("phi samples are not nondecreasing in z: data may be inconsistent")

    def __len__(self):
        return self.z.size


def phi_samples_from_data(spec: InverseProblemSpec, excitation_tol=1e-8):
    """Steps of the uniqueness argument: transform, divide, invert ``F``, square.

    Raises
    ------
    ExcitationError
        If ``L g0`` (nearly) vanishes at a sample, measured against the
        transform of ``|g0|``.
    RangeError
        If a ratio falls outside the monotone branch; ``index`` names the sample.
    """
    z = spec.z_samples
    d, dtail = forward_laplace(spec.data, z, spec.tail_policy, True, spec.rule)
    g, gtail = forward_laplace(spec.g0, z, spec.tail_policy, True, spec.rule)
    g_abs = forward_laplace(
        TimeSeries(spec.g0.t, np.abs(spec.g0.value)), z, spec.tail_policy, rule=spec.rule
    )
    d, g = np.atleast_1d(d), np.atleast_1d(g)
    tail = np.abs(np.atleast_1d(dtail)) + np.abs(np.atleast_1d(gtail))
    phi = np.empty_like(z)
    res = np.empty_like(z)
    F = _map(spec.kind)
    for k in range(z.size):
        if not abs(g[k]) > excitation_tol * abs(g_abs[k]):
            raise ExcitationError(
                f"excitation vanishes at z_{k + 1} = {z[k]:.6g}: |L g0| = {abs(g[k]):.3g}",
                index=k + 1,
            )
        r = d[k] / (-2 * g[k])
        try:
            y = invert_F(r, spec.probe, spec.kind)
        except RangeError as exc:
            raise RangeError(
                f"sample {k + 1} (z = {z[k]:.6g}): {exc}", interval=exc.interval, index=k + 1
            ) from None
        phi[k] = y * y
        res[k] = float(F(y, spec.probe)) - r
    return PhiSampleSet(z, phi, d, g, tail, res)


# -- reconstruction -------------------------------------------------------------------


def moment_matrix(z, alpha_grid):
    """``A[k, i] = int hat_i(alpha) z_k^alpha dalpha`` for piecewise-linear hats.

    Integrated exactly, so the only discretisation is the piecewise-linear
    model of ``mu`` itself.
    """
    a = np.asarray(alpha_grid, dtype=float)
    L = np.log(np.asarray(z, dtype=float))[:, None]
    h = np.diff(a)[None, :]
    x = L * h
    e0 = np.exp(L * a[None, :-1])
    # int_0^h e^{L s} (1 - s/h) ds and int_0^h e^{L s} s/h ds, via expm1
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    left = np.where(small, h * (0.5 + x / 6 + x**2 / 24), h * (np.expm1(xs) - xs) / xs**2)
    right = np.where(
        small, h * (0.5 + x / 3 + x**2 / 8), h * (xs * np.exp(xs) - np.expm1(xs)) / xs**2
    )
    A = np.zeros((L.shape[0], a.size))
    A[:, :-1] += e0 * left
    A[:, 1:] += e0 * right
    return A


def second_difference_matrix(n):
    D = np.zeros((n - 2, n))
    i = np.arange(n - 2)
    D[i, i], D[i, i + 1], D[i, i + 2] = 1.0, -2.0, 1.0
    return D


@dataclass
class RecoveredMu:
    """Reconstructed weight and fit diagnostics."""

    alpha_grid: np.ndarray
    values: np.ndarray
    data_residual: float
    reg_norm: float
    reg_weight: float
    samples: PhiSampleSet = None

    @property
    def positive_at_one(self):
        return bool(self.values[-1] > 0)

    def as_muspec(self):
        return MuSpec(self.alpha_grid, self.values, 1)

    def relative_l2_error(self, mu_true):
        ref = mu_true(self.alpha_grid)
        diff = self.values - ref
        w = np.zeros_like(self.alpha_grid)
        h = np.diff(self.alpha_grid)
        w[:-1] += h / 2
        w[1:] += h / 2
        return float(np.sqrt(w @ diff**2) / np.sqrt(w @ ref**2))

    def to_json(self, path):
        d = self.as_muspec().to_dict()
        d["diagnostics"] = {
            "data_residual": self.data_residual,
            "reg_norm": self.reg_norm,
            "reg_weight": self.reg_weight,
            "positive_at_one": self.positive_at_one,
        }
        atomic_write_text(path, dumps_json(d))

    def diagnostics_csv(self, path):
        write_diagnostics_csv(self.samples, path, self.fitted_phi())

    def fitted_phi(self):
        return moment_matrix(self.samples.z, self.alpha_grid) @ self.values


def write_diagnostics_csv(samples: PhiSampleSet, path, fitted=None):
    """Per-sample table ``z_k, d_k, g_k, phi_k, residual_k``.

    ``residual_k`` is the relative fit residual when ``fitted`` is given,
    otherwise the residual of the scalar inversion.
    """
    res = samples.f_residual if fitted is None else (fitted - samples.phi) / samples.phi
    buf = io.StringIO()
    buf.write("z,d,g,phi,residual\n")
    table = np.column_stack([samples.z, samples.d, samples.g, samples.phi, res])
    np.savetxt(buf, table, fmt="%.17g", delimiter=",")
    atomic_write_text(path, buf.getvalue())


def reconstruct_mu(samples: PhiSampleSet, alpha_grid=None, reg_weight=1e-8, cond_limit=1e12):
    """Tikhonov-regularised nonnegative least squares for ``mu`` on ``alpha_grid``.

    Minimises ``sum_k ((A mu)_k / phi_k - 1)^2 + reg_weight |D2 mu|^2`` over
    ``mu >= 0``, with ``D2`` the second-difference matrix.  Rows are scaled
    by ``1 / phi_k`` so each sample counts in relative terms.

    Raises
    ------
    DomainError
        For fewer than two samples or fewer than eight grid nodes.
    ConditioningError
        If ``reg_weight == 0`` and the scaled moment matrix is numerically
        singular.
    """
    if samples is None or len(samples) < 2:
        raise DomainError("reconstruction needs at least two Phi samples")
    a = np.linspace(0, 1, 21) if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    if a.size < 8 or a[0] != 0 or a[-1] != 1 or np.any(np.diff(a) <= 0):
        raise DomainError("alpha_grid needs at least 8 increasing nodes from 0 to 1")
    if reg_weight < 0:
        raise DomainError("reg_weight must be nonnegative")
    A = moment_matrix(samples.z, a) / samples.phi[:, None]
    b = np.ones(len(samples))
    D = second_difference_matrix(a.size)
    if reg_weight == 0:
        cond = np.linalg.cond(A)
        if not cond < cond_limit:
            raise ConditioningError(
                f"moment matrix condition number {cond:.3g} exceeds {cond_limit:.0e}; "
                "use reg_weight > 0"
            )
        M, rhs = A, b
    else:
        M = np.vstack([A, math.sqrt(reg_weight) * D])
        rhs = np.concatenate([b, np.zeros(D.shape[0])])
    values, _ = nnls(M, rhs, maxiter=50 * a.size)
    resid = float(np.linalg.norm(A @ values - b))
    penalty = float(np.linalg.norm(D @ values))
    return RecoveredMu(a, values, resid, penalty, reg_weight, samples)


def l_curve(samples, alpha_grid=None, regs=None):
    """Residual and penalty norms along a regularisation path, with a corner pick.

    Returns ``(regs, residuals, penalties, best)`` where ``best`` maximises
    the discrete curvature of the log-log curve.
    """
    regs = np.geomspace(1e-12, 1e0, 25) if regs is None else np.asarray(regs, dtype=float)
    fits = [reconstruct_mu(samples, alpha_grid, r) for r in regs]
    res = np.array([f.data_residual for f in fits])
    pen = np.array([f.reg_norm for f in fits])
    x = np.log(np.maximum(res, 1e-300))
    y = np.log(np.maximum(pen, 1e-300))
    if regs.size < 3:
        return regs, res, pen, float(regs[0])
    dx, dy = np.gradient(x), np.gradient(y)
    ddx, ddy = np.gradient(dx), np.gradient(dy)
    with np.errstate(invalid="ignore", divide="ignore"):
        kappa = (dx * ddy - dy * ddx) / (dx**2 + dy**2) ** 1.5
    kappa = np.nan_to_num(kappa, nan=-np.inf)
    return regs, res, pen, float(regs[int(np.argmax(kappa))])


def recover_mu(spec: InverseProblemSpec):
    """Full pipeline: samples from data, then reconstruction."""
    samples = phi_samples_from_data(spec)
    return reconstruct_mu(samples, spec.alpha_grid, spec.reg_weight)


# -- synthetic data -----------------------------------------------------------------


def data_grid(t_max=20.0, n=400, exponent=2.0):
    """Default time grid for synthetic traces: graded toward ``t = 0``."""
    return graded_grid(t_max, n, exponent)


def synth_trace(mu: MuSpec, g0: TimeSeries, probe, kind="interior", eps=1e-3, noise=0.0,
                seed=None, contour=DEFAULT_CONTOUR):
    """Trace ``u(x0, .)`` or flux ``u_x(x*, .)`` for boundary input ``g0`` alone.

    The field comes from the theta representation with ``u0 = g1 = f = 0``.
    The flux is a centred difference one cell of width ``eps`` inside; at
    ``x* = 1`` two such differences are Richardson-extrapolated to the
    boundary.  Noise is i.i.d. Gaussian with standard deviation
    ``noise * max|trace|`` from ``numpy.random.default_rng(seed)``.
    """
    _check_probe(probe, kind)
    if noise < 0:
        raise DomainError("noise must be nonnegative")
    if noise > 0 and seed is None:
        raise DomainError("a seed is required when noise > 0")
    t = g0.t
    if kind == "interior":
        xs = np.array([probe])
    elif probe == 1.0:
        xs = 1.0 - eps * np.arange(4)[::-1]
    else:
        if probe + eps > 1:
            raise DomainError("probe too close to x = 1 for the centred difference")
        xs = probe + eps * np.array([-1.0, 1.0])
    live = xs[(xs > 0) & (xs < 1)]
    u = np.zeros((xs.size, t.size))
    u[(xs > 0) & (xs < 1)] = -2 * boundary_convolution(mu, live, t, g0.value, contour)
    if kind == "interior":
        trace = u[0]
    elif probe == 1.0:
        # u at 1-3e, 1-2e, 1-e, 1; centred slopes at 1-2e and 1-e
        d_far = (u[2] - u[0]) / (2 * eps)
        d_near = (u[3] - u[1]) / (2 * eps)
        trace = 2 * d_near - d_far
    else:
        trace = (u[1] - u[0]) / (2 * eps)
    if noise > 0:
        rng = np.random.default_rng(seed)
        trace = trace + noise * np.max(np.abs(trace)) * rng.standard_normal(trace.size)
    return TimeSeries(t, trace)
