"""Collision kernels B(z, sigma) = b(cos theta) |z|^gamma for soft potentials.

A kernel is the product of an angular law b(cos theta) and a radial power
|z|^gamma with gamma < 0 (soft potentials: the kernel decays in relative
speed and is singular at zero relative speed).  This module defines the
angular laws, the kernel container with its optional truncations, and the
derived angular constants:

* A0      -- total angular mass  |S^(N-2)| int b(cos theta) sin^(N-2)theta dtheta
             (Grad cutoff constant),
* A_upper -- smallest constant with  int B sin^2 theta dsigma <= A_upper |z|^gamma,
* A_lower -- largest constant with   int B sin^2 theta dsigma >= A_lower (1+|z|^2)^(gamma/2).

Truncation variants: a pointwise cap B_n = min(B, n), a near/far radial
split at |z| = lambda, and a grazing-angle cut sin(theta) <= eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad


class SingularEvaluation(ValueError):
    """Pointwise kernel evaluation requested at |z| = 0 without a cap."""


class NoGradCutoff(ValueError):
    """The angular law is not integrable over the sphere."""


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^(n) in R^(n+1); |S^0| = 2."""
    if n == 0:
        return 2.0
    if n == 1:
        return 2.0 * math.pi
    if n == 2:
        return 4.0 * math.pi
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass(frozen=True)
class AngularLaw:
    """Angular factor b(cos theta) >= 0 on theta in [0, pi].

    kind:
        "constant" -- b = c
        "power"    -- b = c * sin(theta)^(-nu), integrable iff nu < N-1
        "table"    -- linear interpolation of sampled values on a theta grid
    """

    kind: str = "constant"
    c: float = 1.0
    nu: float = 0.0
    table_theta: Optional[np.ndarray] = None
    table_values: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "power", "table"):
            raise ValueError(f"unknown angular law kind {self.kind!r}")
        if self.kind in ("constant", "power") and self.c < 0:
            raise ValueError("angular law must be nonnegative")
        if self.kind == "table":
            th = np.asarray(self.table_theta, dtype=float)
            vals = np.asarray(self.table_values, dtype=float)
            if th.ndim != 1 or th.shape != vals.shape or th.size < 2:
                raise ValueError("table law needs matching theta/value arrays")
            if np.any(vals < 0):
                raise ValueError("angular law must be nonnegative")
            if np.any(np.diff(th) <= 0):
                raise ValueError("table theta grid must be increasing")
            object.__setattr__(self, "table_theta", th)
            object.__setattr__(self, "table_values", vals)

    def b_of_theta(self, theta):
        """Evaluate b(cos theta) for theta in [0, pi] (scalar or array)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full_like(theta, self.c)
        if self.kind == "power":
            s = np.sin(theta)
            with np.errstate(divide="ignore"):
                out = self.c * np.where(s > 0, s, np.nan) ** (-self.nu)
            return np.where(s > 0, out, np.inf if self.nu > 0 else self.c)
        return np.interp(theta, self.table_theta, self.table_values)

    def b_of_cos(self, cos_theta):
        cos_theta = np.clip(np.asarray(cos_theta, dtype=float), -1.0, 1.0)
        return self.b_of_theta(np.arccos(cos_theta))

    def is_symmetric(self) -> bool:
        """True when b(cos theta) = b(-cos theta) (theta <-> pi - theta)."""
        if self.kind in ("constant", "power"):
            return True
        th = np.linspace(0.0, math.pi, 257)
        return bool(np.allclose(self.b_of_theta(th), self.b_of_theta(math.pi - th),
                                rtol=1e-12, atol=1e-12))


@dataclass(frozen=True)
class Truncation:
    """Optional kernel truncation.

    kind:
        "bn_cap"   -- B_n = min(B, value)
        "near_far" -- keep only |z| <= value ("near") or |z| > value ("far")
        "sin_eps"  -- zero out grazing angles with sin(theta) <= value
    """

    kind: str
    value: float
    side: str = "near"

    def __post_init__(self) -> None:
        if self.kind not in ("bn_cap", "near_far", "sin_eps"):
            raise ValueError(f"unknown truncation kind {self.kind!r}")
        if self.value <= 0:
            raise ValueError("truncation parameter must be positive")
        if self.kind == "sin_eps" and not (0 < self.value < 1):
            raise ValueError("sin_eps cut must lie in (0, 1)")
        if self.side not in ("near", "far"):
            raise ValueError("near_far side must be 'near' or 'far'")


@dataclass(frozen=True)
class KernelSpec:
    """Collision kernel B(z, sigma) = b(cos theta) |z|^gamma with cutoffs."""

    dim: int = 2
    gamma: float = -0.5
    angular: AngularLaw = AngularLaw()
    k_star: float = 1.0
    truncation: Optional[Truncation] = None

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if not (-4.0 <= self.gamma < 0.0):
            raise ValueError("gamma must lie in [-4, 0)")
        if self.k_star <= 0:
            raise ValueError("k_star must be positive")
        if self.angular.kind == "power" and self.angular.nu >= self.dim - 1:
            raise NoGradCutoff("angular power law with nu >= N-1 has no Grad cutoff")

    @property
    def theorem3_mode(self) -> bool:
        """Kernel satisfies the Theorem-3 hypotheses gamma in [-1, 0)."""
        return -1.0 <= self.gamma < 0.0


def eval_B(spec: KernelSpec, rel_speed, cos_theta):
    """Pointwise kernel value b(cos theta) * rel_speed^gamma with truncation.

    Raises SingularEvaluation at rel_speed = 0 unless a cap or a far-side
    radial truncation makes the value finite; callers handling the grid
    diagonal must use the cell-averaged weight instead.
    """
    r = np.asarray(rel_speed, dtype=float)
    ct = np.asarray(cos_theta, dtype=float)
    tr = spec.truncation
    zero = r == 0.0
    if np.any(zero) and not (tr is not None and tr.kind in ("bn_cap", "near_far")):
        raise SingularEvaluation("B(0, sigma) is singular; use a cell-averaged weight")
    b = spec.angular.b_of_cos(ct)
    with np.errstate(divide="ignore"):
        radial = np.where(zero, np.inf, r) ** spec.gamma
    val = b * radial
    if tr is not None:
        if tr.kind == "bn_cap":
            val = np.minimum(val, tr.value)
        elif tr.kind == "near_far":
            mask = (r <= tr.value) if tr.side == "near" else (r > tr.value)
            val = np.where(mask, val, 0.0)
            if np.any(zero) and tr.side == "far":
                val = np.where(zero, 0.0, val)
            elif np.any(zero):
                raise SingularEvaluation("near-side truncation keeps the singularity")
        else:  # sin_eps
            st = np.sqrt(np.maximum(0.0, 1.0 - np.clip(ct, -1.0, 1.0) ** 2))
            val = np.where(st > tr.value, val, 0.0)
    out = np.asarray(val, dtype=float)
    return float(out) if out.ndim == 0 else out


def _angular_integrand(spec: KernelSpec, theta: float, extra_sin2: bool) -> float:
    n = spec.dim
    val = spec.angular.b_of_theta(theta) * math.sin(theta) ** (n - 2)
    if extra_sin2:
        val *= math.sin(theta) ** 2
    tr = spec.truncation
    if tr is not None and tr.kind == "sin_eps" and math.sin(theta) <= tr.value:
        return 0.0
    return float(val)


def angular_mass_A0(spec: KernelSpec) -> float:
    """Grad-cutoff constant A0 = |S^(N-2)| int_0^pi b sin^(N-2)theta dtheta."""
    if spec.angular.kind == "power" and spec.angular.nu >= spec.dim - 1:
        raise NoGradCutoff("no Grad cutoff: angular integral diverges")
    val, err = quad(lambda t: _angular_integrand(spec, t, extra_sin2=False),
                    0.0, math.pi, epsrel=1e-12, epsabs=0.0, limit=400)
    if val > 0 and err > 1e-10 * val:
        raise RuntimeError("angular quadrature failed to reach 1e-10 relative error")
    return sphere_area(spec.dim - 2) * val


def sin2_angular_mass(spec: KernelSpec) -> float:
    """|S^(N-2)| int_0^pi b sin^(N-2)theta sin^2 theta dtheta (the mild-cutoff mass)."""
    val, _ = quad(lambda t: _angular_integrand(spec, t, extra_sin2=True),
                  0.0, math.pi, epsrel=1e-12, epsabs=0.0, limit=400)
    return sphere_area(spec.dim - 2) * val


def sin2_angular_integral(spec: KernelSpec, rel_speed: float) -> float:
    """int_{S^(N-1)} B(z, sigma) sin^2 theta dsigma at |z| = rel_speed."""
    if rel_speed <= 0:
        raise SingularEvaluation("sin2 angular integral needs rel_speed > 0")
    n = spec.dim
    tr = spec.truncation

    def integrand(theta: float) -> float:
        val = eval_B(spec, rel_speed, math.cos(theta))
        return val * math.sin(theta) ** (n - 2) * math.sin(theta) ** 2

    if tr is not None and tr.kind == "near_far":
        keep = (rel_speed <= tr.value) if tr.side == "near" else (rel_speed > tr.value)
        if not keep:
            return 0.0
    val, _ = quad(integrand, 0.0, math.pi, epsrel=1e-12, epsabs=0.0, limit=400)
    return sphere_area(n - 2) * val


def cutoff_constants(spec: KernelSpec, z_sweep=None) -> tuple[float, float]:
    """(A_upper, A_lower): the mild-cutoff constants measured on a |z| sweep.

    A_upper = sup_z |z|^(-gamma) int B sin^2 theta dsigma     (upper cutoff)
    A_lower = inf_z (1+|z|^2)^(-gamma/2) int B sin^2 theta dsigma  (lower cutoff)

    For a pure power kernel the upper ratio is constant in |z| and the lower
    ratio decreases to the same constant as |z| grows.
    """
    if z_sweep is None:
        z_sweep = np.geomspace(0.05, 50.0, 25)
    upper = -math.inf
    lower = math.inf
    for z in z_sweep:
        integral = sin2_angular_integral(spec, float(z))
        upper = max(upper, integral * float(z) ** (-spec.gamma))
        lower = min(lower, integral * (1.0 + float(z) ** 2) ** (-spec.gamma / 2.0))
    return upper, lower
