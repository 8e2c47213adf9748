"""Collision geometry: post-collision maps, quadrature nodes, the pair
operator, and their invariants."""

import math

import numpy as np
import pytest

from softboltz.geometry import (collision_distances, delta_phi, l_operator,
                                omega_average_delta_phi, omega_nodes,
                                ortho_basis, post_collision,
                                post_collision_sigma, theta_nodes)
from softboltz.kernel import AngularLaw, KernelSpec, Truncation

RNG = np.random.default_rng(42)


def _random_pair(dim):
    v = RNG.normal(size=dim)
    v_star = RNG.normal(size=dim)
    return v, v_star


def _perp(k):
    return ortho_basis(k)[0]


@pytest.mark.parametrize("dim", [2, 3])
def test_post_collision_conserves_momentum_energy(dim):
    for _ in range(50):
        v, v_star = _random_pair(dim)
        theta = float(RNG.uniform(0.0, math.pi))
        omega = _perp((v - v_star) / np.linalg.norm(v - v_star))
        vp, vsp = post_collision(v, v_star, theta, omega)
        assert np.allclose(vp + vsp, v + v_star, atol=1e-12)
        assert (np.dot(vp, vp) + np.dot(vsp, vsp)
                == pytest.approx(np.dot(v, v) + np.dot(v_star, v_star),
                                 rel=1e-12))


def test_post_collision_endpoint_angles():
    v, v_star = np.array([1.0, 0.0]), np.array([-1.0, 0.0])
    omega = np.array([0.0, 1.0])
    vp, vsp = post_collision(v, v_star, 0.0, omega)
    assert np.allclose(vp, v) and np.allclose(vsp, v_star)
    vp, vsp = post_collision(v, v_star, math.pi, omega)
    assert np.allclose(vp, v_star) and np.allclose(vsp, v)


def test_post_collision_matches_sigma_form():
    for dim in (2, 3):
        v, v_star = _random_pair(dim)
        k = (v - v_star) / np.linalg.norm(v - v_star)
        theta = 1.1
        omega = _perp(k)
        sigma = math.cos(theta) * k + math.sin(theta) * omega
        a = post_collision(v, v_star, theta, omega)
        b = post_collision_sigma(v, v_star, sigma)
        assert np.allclose(a[0], b[0], atol=1e-12)
        assert np.allclose(a[1], b[1], atol=1e-12)


def test_post_collision_validates_inputs():
    v, v_star = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    with pytest.raises(ValueError):
        post_collision(v, v_star, -0.1, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        post_collision(v, v_star, 1.0, np.array([0.0, 2.0]))  # not unit
    k = (v - v_star) / np.linalg.norm(v - v_star)
    with pytest.raises(ValueError):
        post_collision(v, v_star, 1.0, k)  # not orthogonal to k


def test_collision_distances_identity():
    v, v_star = np.array([2.0, 1.0]), np.array([-1.0, 0.5])
    r = np.linalg.norm(v - v_star)
    for theta in (0.0, 0.7, math.pi / 2, math.pi):
        d1, d2 = collision_distances(v, v_star, theta)
        assert d1 == pytest.approx(r * math.sin(theta / 2.0), abs=1e-14)
        assert d2 == pytest.approx(r * math.cos(theta / 2.0), abs=1e-14)
    with pytest.raises(ValueError):
        collision_distances(v, v_star, 3.5)


@pytest.mark.parametrize("dim", [2, 3])
def test_ortho_basis_is_orthonormal(dim):
    for _ in range(20):
        k = RNG.normal(size=dim)
        k /= np.linalg.norm(k)
        basis = ortho_basis(k)
        assert len(basis) == dim - 1
        for e in basis:
            assert np.linalg.norm(e) == pytest.approx(1.0, rel=1e-12)
            assert abs(np.dot(e, k)) < 1e-12
        if dim == 3:
            assert abs(np.dot(basis[0], basis[1])) < 1e-12


def test_omega_nodes_2d_two_point_set():
    k = np.array([1.0, 0.0])
    nodes, weights = omega_nodes(k, 8)
    assert nodes.shape == (2, 2)
    assert np.allclose(nodes[0], -nodes[1])
    assert np.allclose(weights, 1.0)
    assert abs(np.dot(nodes[0], k)) < 1e-14


def test_omega_nodes_3d_circle():
    k = np.array([0.0, 0.0, 1.0])
    nodes, weights = omega_nodes(k, 12)
    assert nodes.shape == (12, 3)
    assert weights.sum() == pytest.approx(2.0 * math.pi, rel=1e-12)
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0)
    assert np.max(np.abs(nodes @ k)) < 1e-12


def test_theta_nodes_integrate_polynomials():
    th, w = theta_nodes(8)
    assert float(w.sum()) == pytest.approx(math.pi, rel=1e-13)
    assert float(w @ np.sin(th)) == pytest.approx(2.0, rel=1e-10)


def test_delta_phi_vanishes_for_collision_invariants():
    v, v_star = np.array([1.3, -0.2]), np.array([0.4, 2.0])
    k = (v - v_star) / np.linalg.norm(v - v_star)
    for theta in (0.3, 1.2, 2.8):
        sigma = math.cos(theta) * k + math.sin(theta) * _perp(k)
        for phi in (lambda u: 1.0, lambda u: u[0], lambda u: u @ u):
            assert abs(delta_phi(phi, v, v_star, sigma)) < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_l_operator_vanishes_on_invariants(dim):
    spec = KernelSpec(dim=dim, gamma=-0.5, angular=AngularLaw())
    v, v_star = _random_pair(dim)
    scale = abs(l_operator(spec, lambda u: float(np.dot(u, u)) ** 2,
                           v, v_star))
    for phi in (lambda u: 1.0, lambda u: u[0], lambda u: float(np.dot(u, u))):
        assert abs(l_operator(spec, phi, v, v_star)) <= 1e-10 * max(scale, 1.0)


def test_l_operator_zero_at_coincident_velocities():
    spec = KernelSpec(dim=2, gamma=-0.5, angular=AngularLaw())
    v = np.array([0.3, 0.4])
    assert l_operator(spec, lambda u: float(np.dot(u, u)) ** 2, v, v) == 0.0


def test_l_operator_rejects_very_soft_untruncated():
    spec = KernelSpec(dim=2, gamma=-3.5, angular=AngularLaw())
    with pytest.raises(ValueError):
        l_operator(spec, lambda u: u[0] ** 4, np.zeros(2), np.ones(2))
    capped = KernelSpec(dim=2, gamma=-3.5, angular=AngularLaw(),
                        truncation=Truncation("bn_cap", 100.0))
    assert np.isfinite(l_operator(capped, lambda u: u[0] ** 4,
                                  np.zeros(2), np.ones(2)))


def test_omega_average_reduces_to_midpoint_in_2d():
    v, v_star = np.array([1.0, 0.2]), np.array([-0.5, 0.9])
    k = (v - v_star) / np.linalg.norm(v - v_star)
    omega = _perp(k)
    theta = 0.8

    def phi(u):
        return float(u[0] ** 3)

    avg = omega_average_delta_phi(phi, v, v_star, theta)
    plus = delta_phi(phi, v, v_star,
                     math.cos(theta) * k + math.sin(theta) * omega)
    minus = delta_phi(phi, v, v_star,
                      math.cos(theta) * k - math.sin(theta) * omega)
    assert avg == pytest.approx(0.5 * (plus + minus), rel=1e-12)
