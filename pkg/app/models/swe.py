"""
Pointwise shallow-water algebra.

All functions accept conserved states as arrays whose last axis is (H, q) and
are vectorised over the leading axes.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

from app.core.config import settings
from app.core.exceptions import ConfigurationError, StateError

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class PhysParams:
    g: float = 9.81
    n_M: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ConfigurationError("Gravity must be positive", details={"g": self.g})
        if self.n_M < 0:
            raise ConfigurationError(
                "Manning coefficient must be non-negative", details={"n_M": self.n_M}
            )

    @classmethod
    def from_settings(cls, n_M: float = 0.0) -> "PhysParams":
        return cls(g=settings.GRAVITY, n_M=n_M)

    @property
    def has_friction(self) -> bool:
        return self.n_M > 0


@dataclass(frozen=True)
class ConservedState:
    H: float
    q: float

    def __post_init__(self):
        check_state(self.as_array())

    @property
    def v(self) -> float:
        return self.q / self.H

    def c(self, p: PhysParams) -> float:
        return float(np.sqrt(p.g * self.H))

    def eta(self, B: float) -> float:
        return self.H + B

    def as_array(self) -> FloatArray:
        return np.array([self.H, self.q], dtype=float)


def check_state(u, where: Optional[FloatArray] = None) -> FloatArray:
    """
    Validate H > 0 and finiteness.

    Args:
        u: states, last axis (H, q)
        where: optional coordinates with the leading shape of ``u``, reported
               in the error details

    Raises:
        StateError: naming the first offending entry
    """
    u = np.asarray(u, dtype=float)
    H = u[..., 0]
    bad = ~np.isfinite(u).all(axis=-1) | ~(H > 0)
    if np.any(bad):
        idx = np.unravel_index(int(np.argmax(bad)), bad.shape) if bad.ndim else ()
        details = {"index": [int(i) for i in idx], "H": float(H[idx]), "q": float(u[idx][1])}
        if where is not None:
            details["x"] = float(np.asarray(where)[idx])
        raise StateError("Dry or non-finite state encountered", details=details)
    return u


def _stack(a, b) -> FloatArray:
    return np.stack([a, b], axis=-1)


# ----------------------------------------------------------------------
# Flux and source
# ----------------------------------------------------------------------


def flux_V(u, p: PhysParams) -> FloatArray:
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    return _stack(q, q * q / H)


def flux_HS(u, p: PhysParams) -> FloatArray:
    u = check_state(u)
    H = u[..., 0]
    return _stack(np.zeros_like(H), 0.5 * p.g * H * H)


def flux(u, p: PhysParams) -> FloatArray:
    """F = (q, q^2/H + g H^2/2)"""
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    return _stack(q, q * q / H + 0.5 * p.g * H * H)


def source_V(u, p: PhysParams) -> FloatArray:
    """Manning friction part -(0, g n^2 |q| q / H^(7/3))"""
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    friction = p.g * p.n_M**2 * np.abs(q) * q / H ** (7.0 / 3.0)
    return _stack(np.zeros_like(H), -friction)


def source_HS(u, dBdx, p: PhysParams) -> FloatArray:
    """Bathymetry part -(0, g H dB/dx)"""
    u = check_state(u)
    H = u[..., 0]
    return _stack(np.zeros_like(H), -p.g * H * np.asarray(dBdx, dtype=float))


def source(x, u, dBdx, p: PhysParams) -> FloatArray:
    u = check_state(u, where=None if x is None else np.broadcast_to(x, np.shape(u)[:-1]))
    return source_HS(u, dBdx, p) + source_V(u, p)


# ----------------------------------------------------------------------
# Jacobian and eigensystem
# ----------------------------------------------------------------------


def jacobian(u, p: PhysParams) -> FloatArray:
    """J = [[0, 1], [gH - v^2, 2v]]"""
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    v = q / H
    J = np.zeros(u.shape[:-1] + (2, 2))
    J[..., 0, 1] = 1.0
    J[..., 1, 0] = p.g * H - v * v
    J[..., 1, 1] = 2.0 * v
    return J


def eigen(u, p: PhysParams) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """
    Eigen-decomposition of the flux Jacobian.

    Returns:
        (R, lam, R_inv) with lam = (v - c, v + c) and R = [[1, 1], [v - c, v + c]]
    """
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    v = q / H
    c = np.sqrt(p.g * H)
    lam = _stack(v - c, v + c)

    R = np.ones(u.shape[:-1] + (2, 2))
    R[..., 1, 0] = v - c
    R[..., 1, 1] = v + c

    R_inv = np.empty_like(R)
    inv_2c = 0.5 / c
    R_inv[..., 0, 0] = (v + c) * inv_2c
    R_inv[..., 0, 1] = -inv_2c
    R_inv[..., 1, 0] = -(v - c) * inv_2c
    R_inv[..., 1, 1] = inv_2c
    return R, lam, R_inv


def spectral_radius(u, p: PhysParams) -> FloatArray:
    """|v| + c"""
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    return np.abs(q / H) + np.sqrt(p.g * H)


def abs_jacobian_inverse(u, p: PhysParams, fix_fraction: Optional[float] = None) -> FloatArray:
    """
    B_f = |J|^-1 with a Harten-type smoothing of eigenvalues below fix_fraction * rho.

    Args:
        u: states, last axis (H, q)
        p: physical parameters
        fix_fraction: entropy-fix fraction, defaults to ``ENTROPY_FIX_FRACTION``
    """
    delta = settings.ENTROPY_FIX_FRACTION if fix_fraction is None else fix_fraction
    R, lam, R_inv = eigen(u, p)
    threshold = (delta * spectral_radius(u, p))[..., None]
    abs_lam = np.abs(lam)
    smoothed = (lam * lam + threshold * threshold) / (2.0 * threshold)
    abs_lam = np.where(abs_lam < threshold, smoothed, abs_lam)
    # R diag(1/|lam|) R^-1
    return np.einsum("...ij,...j,...jk->...ik", R, 1.0 / abs_lam, R_inv)


# ----------------------------------------------------------------------
# Entropy variables
# ----------------------------------------------------------------------


def entropy_vars(u, B_value, p: PhysParams) -> FloatArray:
    """w = (g eta - v^2/2, v)"""
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    v = q / H
    eta = H + np.asarray(B_value, dtype=float)
    return _stack(p.g * eta - 0.5 * v * v, v)


def conserved_from_entropy(w, B_value, p: PhysParams) -> FloatArray:
    """Inverse of ``entropy_vars`` for fixed bathymetry"""
    w = np.asarray(w, dtype=float)
    v = w[..., 1]
    H = (w[..., 0] + 0.5 * v * v) / p.g - np.asarray(B_value, dtype=float)
    return _stack(H, H * v)


def entropy_jac_Af(u, p: PhysParams) -> FloatArray:
    """A_f = du/dw = [[1/g, v/g], [v/g, H + v^2/g]], flat-bathymetry form"""
    u = check_state(u)
    H, q = u[..., 0], u[..., 1]
    v = q / H
    A = np.empty(u.shape[:-1] + (2, 2))
    A[..., 0, 0] = 1.0 / p.g
    A[..., 0, 1] = v / p.g
    A[..., 1, 0] = v / p.g
    A[..., 1, 1] = H + v * v / p.g
    return A
