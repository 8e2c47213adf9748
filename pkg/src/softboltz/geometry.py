"""Collision geometry: the post-collision transform, the sphere
parameterization sigma = cos(theta) k + sin(theta) omega, the four-point
difference Delta phi, and the omega-then-theta iterated operator

    L[Delta phi](v, v_*) = int_0^pi B sin^(N-2)theta
                             ( int_{S^(N-2)(k)} Delta phi domega ) dtheta.

All functions are pure.  The degenerate direction k for v = v_* is fixed to
the first coordinate axis, and the orthogonal basis of S^(N-2)(k) is built by
Gram-Schmidt from a fixed axis ordering so results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .kernel import KernelSpec, eval_B, sphere_area


def _unit_k(v: np.ndarray, v_star: np.ndarray) -> tuple[np.ndarray, float]:
    """Relative direction k = (v - v_*)/|v - v_*| with k = e1 when v = v_*."""
    z = v - v_star
    r = float(np.linalg.norm(z))
    if r == 0.0:
        k = np.zeros_like(z)
        k[0] = 1.0
        return k, 0.0
    return z / r, r


def ortho_basis(k: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis of the subspace orthogonal to k (spanning S^(N-2)(k)).

    Built by Gram-Schmidt seeded from the coordinate axes in a fixed order,
    skipping the axis most aligned with k.
    """
    n = k.size
    basis: list[np.ndarray] = []
    order = np.argsort(np.abs(k), kind="stable")  # least-aligned axes first
    for ax in order:
        e = np.zeros(n)
        e[ax] = 1.0
        w = e - np.dot(e, k) * k
        for b in basis:
            w -= np.dot(w, b) * b
        nw = np.linalg.norm(w)
        if nw > 1e-12:
            basis.append(w / nw)
        if len(basis) == n - 1:
            break
    return basis


@dataclass(frozen=True)
class CollisionFrame:
    """Pair geometry: relative direction k and a basis of S^(N-2)(k)."""

    v: np.ndarray
    v_star: np.ndarray
    k: np.ndarray
    basis: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, v, v_star) -> "CollisionFrame":
        v = np.asarray(v, dtype=float)
        v_star = np.asarray(v_star, dtype=float)
        k, _ = _unit_k(v, v_star)
        return cls(v=v, v_star=v_star, k=k, basis=tuple(ortho_basis(k)))


def omega_nodes(k: np.ndarray, n_omega: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights for the omega integral over S^(N-2)(k).

    N=2: the sphere S^0(k) is the two-point set {+k_perp, -k_perp}; the
    integral is the exact two-point sum (weights 1).
    N=3: n_omega uniformly spaced directions on the unit circle orthogonal
    to k, each with weight 2 pi / n_omega.
    """
    n = k.size
    basis = ortho_basis(k)
    if n == 2:
        perp = basis[0]
        return np.array([perp, -perp]), np.ones(2)
    angles = 2.0 * math.pi * np.arange(n_omega) / n_omega
    nodes = (np.outer(np.cos(angles), basis[0])
             + np.outer(np.sin(angles), basis[1]))
    weights = np.full(n_omega, 2.0 * math.pi / n_omega)
    return nodes, weights


def post_collision(v, v_star, theta: float, omega) -> tuple[np.ndarray, np.ndarray]:
    """Post-collision pair

        v'   = cos^2(theta/2) v + sin^2(theta/2) v_* + (|v-v_*|/2) sin(theta) omega
        v'_* = sin^2(theta/2) v + cos^2(theta/2) v_* - (|v-v_*|/2) sin(theta) omega

    for theta in [0, pi] and omega a unit vector orthogonal to k.
    Momentum and energy are conserved exactly up to rounding.
    """
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if not (0.0 <= theta <= math.pi):
        raise ValueError("theta must lie in [0, pi]")
    k, r = _unit_k(v, v_star)
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise ValueError("omega must be a unit vector")
    if abs(float(np.dot(omega, k))) > 1e-12:
        raise ValueError("omega must be orthogonal to k")
    ch2 = math.cos(0.5 * theta) ** 2
    sh2 = math.sin(0.5 * theta) ** 2
    shift = 0.5 * r * math.sin(theta) * omega
    v_prime = ch2 * v + sh2 * v_star + shift
    v_star_prime = sh2 * v + ch2 * v_star - shift
    return v_prime, v_star_prime


def post_collision_sigma(v, v_star, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Post-collision pair in the sigma form:
    v' = (v+v_*)/2 + (|v-v_*|/2) sigma,  v'_* = (v+v_*)/2 - (|v-v_*|/2) sigma."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mid = 0.5 * (v + v_star)
    half = 0.5 * float(np.linalg.norm(v - v_star)) * sigma
    return mid + half, mid - half


def collision_distances(v, v_star, theta: float) -> tuple[float, float]:
    """(|v'-v|, |v'-v_*|) = |v-v_*| (sin(theta/2), cos(theta/2))."""
    if not (0.0 <= theta <= math.pi):
        raise ValueError("theta must lie in [0, pi]")
    r = float(np.linalg.norm(np.asarray(v, float) - np.asarray(v_star, float)))
    return r * math.sin(0.5 * theta), r * math.cos(0.5 * theta)


def delta_phi(phi, v, v_star, sigma) -> float:
    """Delta phi = phi(v') + phi(v'_*) - phi(v) - phi(v_*) at direction sigma."""
    v_prime, v_star_prime = post_collision_sigma(v, v_star, sigma)
    return float(phi(v_prime) + phi(v_star_prime) - phi(v) - phi(v_star))


def theta_nodes(n_theta: int, lo: float = 0.0, hi: float = math.pi):
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = leggauss(n_theta)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def l_operator(spec: KernelSpec, phi, v, v_star,
               n_theta: int = 32, n_omega: int = 16) -> float:
    """Iterated quadrature of L[Delta phi](v, v_*): the omega sum first at
    each Gauss-Legendre theta node, then the theta integral against
    B(|v-v_*|, cos theta) sin^(N-2)theta.

    For v = v_* the integrand vanishes identically (Delta phi = 0 for the
    degenerate pair) and 0 is returned without evaluating the kernel.
    """
    if spec.gamma <= -3.0 and spec.truncation is None:
        raise ValueError("integral not convergent without sin^2 theta gain "
                         "beyond quadratic Delta phi budget; truncate the kernel")
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    k, r = _unit_k(v, v_star)
    if r == 0.0:
        return 0.0
    nodes, omega_w = omega_nodes(k, n_omega)
    th, th_w = theta_nodes(n_theta)
    n = spec.dim
    total = 0.0
    for t, wt in zip(th, th_w):
        ct, st = math.cos(t), math.sin(t)
        inner = 0.0
        for om, wo in zip(nodes, omega_w):
            sigma = ct * k + st * om
            inner += wo * delta_phi(phi, v, v_star, sigma)
        total += wt * eval_B(spec, r, ct) * st ** (n - 2) * inner
    return total


def omega_average_delta_phi(phi, v, v_star, theta: float, n_omega: int = 32) -> float:
    """|S^(N-2)|^(-1) int_{S^(N-2)(k)} Delta phi domega at fixed theta."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    k, _ = _unit_k(v, v_star)
    nodes, w = omega_nodes(k, n_omega)
    ct, st = math.cos(theta), math.sin(theta)
    acc = 0.0
    for om, wo in zip(nodes, w):
        acc += wo * delta_phi(phi, v, v_star, ct * k + st * om)
    return acc / sphere_area(v.size - 2)
