"""Kernel evaluation, angular masses, truncations, and validation."""

import math

import numpy as np
import pytest

from softboltz.kernel import (AngularLaw, KernelSpec, NoGradCutoff,
                              SingularEvaluation, Truncation, angular_mass_A0,
                              cutoff_constants, eval_B, sin2_angular_integral,
                              sin2_angular_mass, sphere_area)


def test_sphere_area_low_dims():
    assert sphere_area(0) == 2.0
    assert sphere_area(1) == pytest.approx(2.0 * math.pi, rel=1e-15)
    assert sphere_area(2) == pytest.approx(4.0 * math.pi, rel=1e-15)


@pytest.mark.parametrize("gamma", [-0.5, -1.0, -2.5])
def test_eval_B_constant_law(gamma):
    spec = KernelSpec(dim=2, gamma=gamma, angular=AngularLaw(c=0.7))
    for r in (0.3, 1.0, 4.2):
        assert eval_B(spec, r, 0.1) == pytest.approx(0.7 * r ** gamma,
                                                     rel=1e-15)


def test_eval_B_singular_at_zero_without_cap():
    spec = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw())
    with pytest.raises(SingularEvaluation):
        eval_B(spec, 0.0, 0.2)


def test_eval_B_bn_cap_clips():
    spec = KernelSpec(dim=2, gamma=-1.0, angular=AngularLaw(),
                      truncation=Truncation("bn_cap", 10.0))
    assert eval_B(spec, 1e-6, 0.0) == pytest.approx(10.0)
    assert eval_B(spec, 2.0, 0.0) == pytest.approx(0.5)


def test_eval_B_near_far_split():
    near = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw(),
                      truncation=Truncation("near_far", 1.0, side="near"))
    far = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw(),
                     truncation=Truncation("near_far", 1.0, side="far"))
    assert eval_B(near, 0.5, 0.0) > 0.0
    assert eval_B(near, 2.0, 0.0) == 0.0
    assert eval_B(far, 0.5, 0.0) == 0.0
    assert eval_B(far, 2.0, 0.0) > 0.0
    # the two halves add back to the untruncated kernel
    full = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw())
    for r in (0.5, 2.0):
        assert (eval_B(near, r, 0.0) + eval_B(far, r, 0.0)
                == pytest.approx(eval_B(full, r, 0.0), rel=1e-15))


def test_eval_B_sin_eps_zeroes_grazing():
    spec = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw(),
                      truncation=Truncation("sin_eps", 0.1))
    assert eval_B(spec, 1.0, math.cos(0.01)) == 0.0
    assert eval_B(spec, 1.0, math.cos(math.pi / 2)) > 0.0


@pytest.mark.parametrize("dim,expected", [
    (2, 2.0 * math.pi),          # |S^0| * int_0^pi b dtheta = 2 * pi * c
    (3, 2.0 * math.pi * 2.0),    # |S^1| * int_0^pi b sin = 2 pi * 2 c
])
def test_angular_mass_constant_law(dim, expected):
    spec = KernelSpec(dim=dim, gamma=-0.5, angular=AngularLaw(c=1.0))
    assert angular_mass_A0(spec) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("dim,expected", [
    (2, 2.0 * math.pi / 2.0),         # 2 * int sin^2 = 2 * pi/2
    (3, 2.0 * math.pi * 4.0 / 3.0),   # 2 pi * int sin^3 = 2 pi * 4/3
])
def test_sin2_angular_mass_constant_law(dim, expected):
    spec = KernelSpec(dim=dim, gamma=-0.5, angular=AngularLaw(c=1.0))
    assert sin2_angular_mass(spec) == pytest.approx(expected, rel=1e-10)


def test_sin2_angular_integral_scales_with_speed():
    spec = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw())
    base = sin2_angular_integral(spec, 1.0)
    assert sin2_angular_integral(spec, 4.0) == pytest.approx(
        base * 4.0 ** -0.5, rel=1e-10)


def test_cutoff_constants_bracket_the_integral():
    spec = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw(),
                      truncation=Truncation("bn_cap", 50.0))
    a_up, a_lo = cutoff_constants(spec)
    assert a_up > 0 and a_lo > 0
    for z in np.geomspace(0.05, 10.0, 25):
        val = sin2_angular_integral(spec, float(z))
        assert val <= a_up * z ** spec.gamma * (1.0 + 1e-9)
        assert val >= a_lo * (1.0 + z * z) ** (spec.gamma / 2.0) * (1.0 - 1e-9)


def test_power_law_without_grad_cutoff_rejected():
    with pytest.raises(NoGradCutoff):
        KernelSpec(dim=2, gamma=-0.5,
                   angular=AngularLaw(kind="power", nu=1.5))


def test_table_law_interpolates():
    th = np.linspace(0.0, math.pi, 9)
    law = AngularLaw(kind="table", table_theta=th,
                     table_values=np.full(9, 2.0))
    spec = KernelSpec(dim=2, gamma=-1.0, angular=law)
    assert eval_B(spec, 2.0, 0.3) == pytest.approx(1.0, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(dim=4, gamma=-0.5, angular=AngularLaw())
    with pytest.raises(ValueError):
        KernelSpec(dim=2, gamma=0.0, angular=AngularLaw())
    with pytest.raises(ValueError):
        KernelSpec(dim=2, gamma=-4.5, angular=AngularLaw())
    with pytest.raises(ValueError):
        Truncation("bn_cap", -1.0)
    with pytest.raises(ValueError):
        Truncation("sin_eps", 1.5)
    with pytest.raises(ValueError):
        AngularLaw(c=-1.0)
