r"""The distributed-order weight :math:`\mu(\alpha)` and the kernels it defines.

A weight is stored as samples on a grid of orders in ``[0, 1]`` together
with an interpolation rule.  From it we get the Laplace symbol

.. math:: \Phi(z) = \int_0^1 \mu(\alpha) z^\alpha \, d\alpha

and the Caputo-type memory kernel

.. math:: \eta(s) = \int_0^1 \frac{\mu(\alpha)}{\Gamma(1-\alpha)} s^{-\alpha}\, d\alpha .

A ``power_surrogate`` weight is a Dirac mass at a single order
:math:`\alpha_0`; it gives :math:`\Phi(z) = z^{\alpha_0}` and exists so that
closed-form heat-kernel and Mittag-Leffler results can be used as oracles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import rgamma

from .errors import DomainError
from .series import atomic_write_text

#: Minimum number of Gauss-Legendre nodes used for the order integral.
MIN_ALPHA_NODES = 64


@dataclass(frozen=True)
class PsiParams:
    """Lower-bound class for weights: ``mu >= c_psi`` on ``(beta0, beta1)``."""

    c_psi: float
    beta0: float
    beta1: float

    def __post_init__(self):
        if not self.c_psi > 0:
            raise DomainError("c_psi must be positive")
        if not 0 < self.beta0 < self.beta1 < 1:
            raise DomainError("need 0 < beta0 < beta1 < 1")

    def to_dict(self):
        return {"c_psi": self.c_psi, "beta0": self.beta0, "beta1": self.beta1}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["c_psi"]), float(d["beta0"]), float(d["beta1"]))


@dataclass(frozen=True)
class MuSpec:
    """A distributed-order weight.

    Parameters
    ----------
    nodes : array_like
        Strictly increasing orders, first 0 and last 1.  Ignored for the
        surrogate mode.
    values : array_like
        Weight values at ``nodes``.
    interp_order : {1, 3}
        1 for piecewise-linear, 3 for the C1 monotone cubic (PCHIP)
        interpolant.
    alpha0 : float or None
        If given, the spec is the ``power_surrogate(alpha0)`` with
        ``Phi(z) = z**alpha0``.
    """

    nodes: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    values: np.ndarray = field(default_factory=lambda: np.array([1.0, 1.0]))
    interp_order: int = 1
    alpha0: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).copy()
        values = np.asarray(self.values, dtype=float).copy()
        if self.alpha0 is not None:
            if not 0 < self.alpha0 <= 1:
                raise DomainError("power_surrogate order must lie in (0, 1]")
        else:
            if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
                raise DomainError("nodes and values must be 1-D of equal length >= 2")
            if np.any(np.diff(nodes) <= 0):
                raise DomainError("nodes must be strictly increasing")
            if nodes[0] != 0.0 or nodes[-1] != 1.0:
                raise DomainError("nodes must start at 0 and end at 1")
            if not np.all(np.isfinite(values)):
                raise DomainError("values must be finite")
        if self.interp_order not in (1, 3):
            raise DomainError("interp_order must be 1 or 3")
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c=1.0, n=11):
        nodes = np.linspace(0.0, 1.0, n)
        return cls(nodes, np.full(n, float(c)))

    @classmethod
    def from_function(cls, func, n=21, interp_order=1):
        nodes = np.linspace(0.0, 1.0, n)
        return cls(nodes, np.asarray(func(nodes), dtype=float) * np.ones(n), interp_order)

    @classmethod
    def power_surrogate(cls, alpha0):
        return cls(alpha0=float(alpha0))

    @property
    def is_surrogate(self):
        return self.alpha0 is not None

    @property
    def mode(self):
        return {"power_surrogate": self.alpha0} if self.is_surrogate else "sampled"

    # -- interpolation and quadrature --------------------------------------

    @cached_property
    def _interpolant(self):
        if self.interp_order == 3:
            return PchipInterpolator(self.nodes, self.values)
        return lambda a: np.interp(a, self.nodes, self.values)

    def __call__(self, alpha):
        """Evaluate the interpolated weight."""
        if self.is_surrogate:
            raise DomainError("a power_surrogate weight has no pointwise values")
        return np.asarray(self._interpolant(np.asarray(alpha, dtype=float)), dtype=float)

    @cached_property
    def quadrature(self):
        """Gauss-Legendre nodes and weights (times mu) for the order integral."""
        panels = self.nodes.size - 1
        q = max(8, math.ceil(MIN_ALPHA_NODES / panels))
        x, w = np.polynomial.legendre.leggauss(q)
        a, b = self.nodes[:-1, None], self.nodes[1:, None]
        alpha = (0.5 * (b - a) * (x + 1) + a).ravel()
        weight = (0.5 * (b - a) * w).ravel()
        return alpha, weight * self(alpha)

    def scaled(self, c):
        if self.is_surrogate:
            raise DomainError("cannot scale a surrogate")
        return MuSpec(self.nodes, c * self.values, self.interp_order)

    def max_value(self):
        if self.is_surrogate:
            raise DomainError("a power_surrogate weight has no maximum")
        alpha = np.linspace(0, 1, 2001)
        return float(max(self(alpha).max(), self.values.max()))

    # -- serialisation -----------------------------------------------------

    def to_dict(self):
        if self.is_surrogate:
            return {"nodes": [], "values": [], "interp_order": self.interp_order,
                    "mode": {"power_surrogate": self.alpha0}}
        return {
            "nodes": self.nodes.tolist(),
            "values": self.values.tolist(),
            "interp_order": self.interp_order,
            "mode": "sampled",
        }

    @classmethod
    def from_dict(cls, d):
        mode = d.get("mode", "sampled")
        order = int(d.get("interp_order", 1))
        if isinstance(mode, dict):
            if set(mode) != {"power_surrogate"}:
                raise DomainError(f"unknown mu mode {mode!r}")
            return cls(alpha0=float(mode["power_surrogate"]), interp_order=order)
        if mode != "sampled":
            raise DomainError(f"unknown mu mode {mode!r}")
        return cls(np.asarray(d["nodes"], float), np.asarray(d["values"], float), order)

    def to_json(self, path=None):
        text = dumps_json(self.to_dict())
        if path is not None:
            atomic_write_text(path, text)
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def dumps_json(obj, indent=2):
    """JSON text with every float written to 17 significant digits."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (float, np.floating)):
            if not math.isfinite(o):
                raise ValueError("non-finite float in JSON output")
            return format(float(o), ".17g")
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, np.ndarray):
            o = o.tolist()
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            items = [pad + enc(v, level + 1) for v in o]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj, 0) + "\n"


@dataclass
class AdmissibilityReport:
    """Outcome of :func:`validate`; ``violations`` empty means admissible."""

    violations: list[str] = field(default_factory=list)

    @property
    def admissible(self):
        return not self.violations

    def __bool__(self):
        return self.admissible


def validate(mu, psi=None):
    """Check the weight against the standing assumptions and, optionally, Psi.

    The interpolant must be nonnegative on ``[0, 1]`` with ``mu(1) > 0``;
    with ``psi`` it must also satisfy ``mu >= psi.c_psi`` on
    ``(psi.beta0, psi.beta1)``.  Never raises.
    """
    report = AdmissibilityReport()
    if mu.is_surrogate:
        report.violations.append(
            f"power_surrogate({mu.alpha0}) is a Dirac weight, not a C1 function"
        )
        return report
    dense = np.union1d(np.linspace(0.0, 1.0, 4001), mu.nodes)
    vals = mu(dense)
    if vals.min() < 0:
        report.violations.append(
            f"negativity: mu({dense[vals.argmin()]:.6g}) = {vals.min():.6g} < 0"
        )
    if not mu(1.0) > 0:
        report.violations.append("mu(1)≠0 fails: mu(1) = 0")
    if psi is not None:
        inner = dense[(dense > psi.beta0) & (dense < psi.beta1)]
        inner = np.concatenate([inner, np.linspace(psi.beta0, psi.beta1, 503)[1:-1]])
        low = mu(inner).min()
        if low < psi.c_psi * (1 - 1e-12):
            report.violations.append(
                f"Psi lower bound fails: min mu on ({psi.beta0}, {psi.beta1}) "
                f"is {low:.6g} < {psi.c_psi}"
            )
    return report


def _log(z):
    z = np.asarray(z)
    if np.any(z == 0):
        raise DomainError("Phi is not defined at z = 0")
    if np.isrealobj(z) and np.all(z > 0):
        return np.log(z.astype(float)), True
    return np.log(z.astype(complex)), False


def eval_phi(mu, z):
    """Laplace symbol ``Phi(z)`` on the principal branch.

    Real positive input gives real output; anything else is evaluated in
    complex arithmetic with ``arg z`` in ``(-pi, pi]``.
    """
    logz, real = _log(z)
    if mu.is_surrogate:
        return np.exp(mu.alpha0 * logz)
    alpha, weight = mu.quadrature
    out = np.zeros(logz.shape, dtype=float if real else complex)
    for a, w in zip(alpha, weight):
        if w != 0.0:
            out += w * np.exp(a * logz)
    return out


def eval_phi_sqrt(mu, z):
    """Principal square root of ``Phi(z)``; argument in ``(-pi/4, pi/4)`` for ``Re z > 0``."""
    return np.sqrt(eval_phi(mu, z))


def eval_eta(mu, s):
    """Memory kernel ``eta(s)`` for ``s > 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("eta is defined for s > 0 only")
    logs = np.log(s)
    if mu.is_surrogate:
        return rgamma(1 - mu.alpha0) * np.exp(-mu.alpha0 * logs)
    alpha, weight = mu.quadrature
    out = np.zeros_like(s)
    for a, w in zip(alpha, weight * rgamma(1 - alpha)):
        out += w * np.exp(-a * logs)
    return out


def eta_primitive(mu, tau, order=1):
    """Repeated primitive of ``eta``, zero at ``tau = 0``.

    ``order = 1`` gives ``int_0^tau eta(s) ds``, ``order = 2`` integrates
    once more; in general the result is
    ``int_0^1 mu(alpha) tau**(order - alpha) / Gamma(order + 1 - alpha) dalpha``.
    For the order-one surrogate ``eta`` is a unit point mass and the first
    primitive is the Heaviside function (taken as 0 at ``tau = 0``).
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise DomainError("eta_primitive needs tau >= 0")
    if order < 1:
        raise DomainError("eta_primitive order must be at least 1")
    pos = tau > 0
    logt = np.log(np.where(pos, tau, 1.0))
    if mu.is_surrogate:
        out = rgamma(order + 1 - mu.alpha0) * np.exp((order - mu.alpha0) * logt)
    else:
        alpha, weight = mu.quadrature
        out = np.zeros_like(tau)
        for a, w in zip(alpha, weight * rgamma(order + 1 - alpha)):
            out += w * np.exp((order - a) * logt)
    return np.where(pos, out, 0.0)
