import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distorder import DomainError, MuSpec, PsiParams, eval_eta, eval_phi, eval_phi_sqrt, validate
from distorder.mu_model import eta_primitive

finite = dict(allow_nan=False, allow_infinity=False)


def test_constant_phi_closed_form(mu_one):
    assert eval_phi(mu_one, np.e) == pytest.approx(np.e - 1, rel=1e-14)
    assert eval_phi(mu_one, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_linear_weight_phi():
    mu = MuSpec.from_function(lambda a: 2 * a, 11)
    assert eval_phi(mu, np.e) == pytest.approx(2.0, rel=1e-13)


def test_phi_sqrt_values(mu_one):
    assert eval_phi_sqrt(MuSpec.power_surrogate(1.0), 4.0) == pytest.approx(2.0)
    assert eval_phi_sqrt(mu_one, np.e) == pytest.approx(1.310832, abs=1e-6)


def test_phi_rejects_zero(mu_one):
    with pytest.raises(DomainError):
        eval_phi(mu_one, 0.0)


def test_eta_values(mu_one):
    # int_0^1 dalpha / Gamma(1 - alpha), adaptive mpmath quadrature at 30 digits
    assert eval_eta(mu_one, 1.0) == pytest.approx(0.54123573432867053, rel=1e-12)
    assert eval_eta(MuSpec.constant(0.0), 0.7) == 0.0
    with pytest.raises(DomainError):
        eval_eta(mu_one, 0.0)


def test_eta_primitive_surrogate():
    mu = MuSpec.power_surrogate(0.5)
    # tau^{m-a}/Gamma(m+1-a)
    assert eta_primitive(mu, 4.0, 1) == pytest.approx(4**0.5 / 0.886226925452758, rel=1e-12)
    assert eta_primitive(mu, 4.0, 2) == pytest.approx(4**1.5 / 1.329340388179137, rel=1e-12)


def test_validate_reports():
    assert validate(MuSpec.constant(1.0))
    rep = validate(MuSpec.from_function(lambda a: 1 - a))
    assert not rep
    assert any("mu(1)" in v for v in rep.violations)
    assert validate(MuSpec.from_function(lambda a: a + 0.2), PsiParams(0.6, 0.4, 0.8))
    assert not validate(MuSpec.from_function(lambda a: a + 0.2), PsiParams(0.7, 0.4, 0.8))
    assert not validate(MuSpec.power_surrogate(0.5))


def test_muspec_validation():
    with pytest.raises(DomainError):
        MuSpec([0.0, 0.5], [1.0, 1.0])
    # negative values are representable but not admissible
    assert not validate(MuSpec([0.0, 0.5, 1.0], [1.0, -1.0, 1.0]))


def test_json_round_trip(tmp_path, mu_lin):
    p = tmp_path / "mu.json"
    mu_lin.to_json(p)
    d = json.loads(p.read_text())
    assert d["mode"] == "sampled" and d["interp_order"] == 1
    back = MuSpec.from_json(p)
    assert np.array_equal(back.values, mu_lin.values)
    assert np.array_equal(back.nodes, mu_lin.nodes)
    s = MuSpec.power_surrogate(0.25)
    s.to_json(tmp_path / "s.json")
    assert MuSpec.from_json(tmp_path / "s.json").alpha0 == 0.25


def test_cubic_interpolation():
    mu = MuSpec.from_function(lambda a: 1 + a**2, 11, interp_order=3)
    assert mu(0.55) == pytest.approx(1 + 0.55**2, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(re=st.floats(0.01, 50, **finite), im=st.floats(-200, 200, **finite))
def test_schwarz_reflection_and_positive_real_part(specimen, re, im):
    z = complex(re, im)
    p = eval_phi(specimen, z)
    assert eval_phi(specimen, z.conjugate()) == pytest.approx(np.conj(p), rel=1e-12, abs=1e-14)
    assert p.real >= -1e-12


@settings(max_examples=40, deadline=None)
@given(re=st.floats(0.01, 50, **finite), im=st.floats(-500, 500, **finite))
def test_upper_bound(specimen, re, im):
    z = complex(re, im)
    r = abs(z)
    if r <= 1.05:
        return
    assert abs(eval_phi(specimen, z)) <= specimen.max_value() * (r - 1) / np.log(r) * (1 + 1e-10)


@settings(max_examples=40, deadline=None)
@given(im=st.floats(-1e4, 1e4, **finite))
def test_lower_bound_for_class(im):
    psi = PsiParams(0.6, 0.4, 0.8)
    mu = MuSpec.from_function(lambda a: a + 0.2, 21)
    gamma = np.exp(1 / psi.beta1) + 0.5
    z = complex(gamma, im)
    r = abs(z)
    lb = psi.c_psi * np.cos(psi.beta1 * np.pi / 2) * (r**psi.beta1 - r**psi.beta0) / np.log(r)
    assert abs(eval_phi(mu, z)) >= lb


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(0, 5, **finite),
    b=st.floats(0, 5, **finite),
    re=st.floats(0.1, 20, **finite),
    im=st.floats(-50, 50, **finite),
)
def test_linearity(a, b, re, im):
    m1 = MuSpec.from_function(lambda x: 1 + x, 11)
    m2 = MuSpec.from_function(lambda x: 2 - x**2, 11)
    comb = MuSpec(m1.nodes, a * m1.values + b * m2.values)
    z = complex(re, im)
    lhs = eval_phi(comb, z)
    rhs = a * eval_phi(m1, z) + b * eval_phi(m2, z)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0, 10, **finite), s=st.floats(1e-3, 10, **finite))
def test_eta_scaling(c, s):
    mu = MuSpec.from_function(lambda a: 1 + a, 11)
    assert eval_eta(mu.scaled(c), s) == pytest.approx(c * eval_eta(mu, s), rel=1e-12, abs=1e-300)


@settings(max_examples=25, deadline=None)
@given(im=st.floats(-1e3, 1e3, **finite))
def test_sqrt_sector(mu_one, im):
    r = eval_phi_sqrt(mu_one, complex(2.0, im))
    assert r.real >= np.sqrt(2) / 2 * abs(r) * (1 - 1e-12)
