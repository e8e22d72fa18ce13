"""Symplectic operations, Gaussian states, and elementary characteristic functions.

Conventions used throughout the package:

* hbar = 1, quadrature ordering ``(q1, p1, q2, p2, ...)``,
* vacuum covariance matrix ``I / 2``,
* characteristic function ``chi(L) = exp(-1/2 L^T (Omega V Omega^T) L - i (Omega d)^T L)``
  with phase-space test vector ``L = (tau1, sigma1, ..., tau_n, sigma_n)``.

All functions are pure; nothing here holds mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "symplectic_form",
    "beam_splitter_symplectic",
    "two_mode_squeezer_symplectic",
    "embed_two_mode",
    "is_symplectic",
    "GaussianState",
    "apply_symplectic",
    "gaussian_char",
    "coherent_char",
    "squeezed_vacuum_char",
    "fock_char",
    "laguerre",
    "tmsv_covariance",
]

_Z2 = np.diag([1.0, -1.0])


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form, one ``[[0, 1], [-1, 0]]`` block per mode."""
    omega = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = omega
    return out


def beam_splitter_symplectic(T: float) -> np.ndarray:
    """4x4 beam-splitter matrix acting on quadratures ``(q_i, p_i, q_j, p_j)``.

    The transmitted block is ``sqrt(T) I`` and the mixing blocks are
    ``+/- sqrt(1-T) I`` with the minus sign on the lower-left block.

    Args:
        T: transmissivity, ``0 < T <= 1``.
    """
    if not 0.0 < T <= 1.0:
        raise ValueError(f"transmissivity must lie in (0, 1], got {T}")
    t = np.sqrt(T)
    rf = np.sqrt(1.0 - T)
    eye = np.eye(2)
    return np.block([[t * eye, rf * eye], [-rf * eye, t * eye]])


def two_mode_squeezer_symplectic(r: float) -> np.ndarray:
    """4x4 two-mode squeezing matrix with ``cosh(r) I`` diagonal and ``sinh(r) Z`` off-diagonal blocks."""
    if not np.isfinite(r):
        raise ValueError(f"squeezing parameter must be finite, got {r}")
    ch = np.cosh(r) * np.eye(2)
    sh = np.sinh(r) * _Z2
    return np.block([[ch, sh], [sh, ch]])


def embed_two_mode(S: np.ndarray, modes: tuple[int, int], n_modes: int) -> np.ndarray:
    """Embed a 4x4 two-mode symplectic into the identity on ``n_modes`` modes."""
    i, j = modes
    if i == j:
        raise ValueError("modes must be distinct")
    out = np.eye(2 * n_modes)
    sl_i = slice(2 * i, 2 * i + 2)
    sl_j = slice(2 * j, 2 * j + 2)
    out[sl_i, sl_i] = S[0:2, 0:2]
    out[sl_i, sl_j] = S[0:2, 2:4]
    out[sl_j, sl_i] = S[2:4, 0:2]
    out[sl_j, sl_j] = S[2:4, 2:4]
    return out


def is_symplectic(S: np.ndarray, tol: float = 1e-12) -> bool:
    """Check ``S Omega S^T = Omega`` to ``tol`` per entry."""
    n = S.shape[0] // 2
    omega = symplectic_form(n)
    return bool(np.max(np.abs(S @ omega @ S.T - omega)) <= tol)


@dataclass(frozen=True)
class GaussianState:
    """Zero-memory Gaussian state: displacement vector ``d`` and covariance ``V``."""

    d: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if d.ndim != 1 or V.shape != (d.size, d.size) or d.size % 2:
            raise ValueError("displacement must be a 2n-vector and covariance 2n x 2n")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "V", 0.5 * (V + V.T))

    @property
    def n_modes(self) -> int:
        return self.d.size // 2

    @classmethod
    def vacuum(cls, n_modes: int) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))

    def require_physical(self, tol: float = 1e-10) -> None:
        """Raise if ``V + i Omega / 2`` has an eigenvalue below ``-tol``."""
        omega = symplectic_form(self.n_modes)
        eigs = np.linalg.eigvalsh(self.V + 0.5j * omega)
        if eigs.min() < -tol:
            raise ValueError(f"unphysical covariance matrix, min eigenvalue {eigs.min():.3e}")


def tmsv_covariance(r: float) -> np.ndarray:
    """Covariance of the two-mode squeezed vacuum at squeezing ``r``."""
    S = two_mode_squeezer_symplectic(r)
    return 0.5 * S @ S.T


def apply_symplectic(state: GaussianState, S: np.ndarray) -> GaussianState:
    """Transform ``d -> S d`` and ``V -> S V S^T``."""
    S = np.asarray(S, dtype=float)
    if S.shape != (state.d.size, state.d.size):
        raise ValueError(f"symplectic shape {S.shape} does not match state dimension {state.d.size}")
    return GaussianState(S @ state.d, S @ state.V @ S.T)


def gaussian_char(state: GaussianState, lam: np.ndarray) -> complex:
    """Characteristic function of a Gaussian state at phase point ``lam``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (state.d.size,):
        raise ValueError(f"phase point length {lam.shape} does not match state dimension {state.d.size}")
    omega = symplectic_form(state.n_modes)
    kernel = omega @ state.V @ omega.T
    return complex(np.exp(-0.5 * lam @ kernel @ lam - 1j * (omega @ state.d) @ lam))


def coherent_char(d_x: float, d_p: float, lam) -> np.ndarray | complex:
    """Single-mode coherent-state characteristic function.

    ``lam`` is ``(tau, sigma)`` or an array of shape ``(..., 2)``; the result is
    ``exp(-(tau^2 + sigma^2)/4 - i (tau d_p - sigma d_x))``.
    """
    lam = np.asarray(lam, dtype=float)
    tau, sig = lam[..., 0], lam[..., 1]
    val = np.exp(-0.25 * (tau**2 + sig**2) - 1j * (tau * d_p - sig * d_x))
    return complex(val) if val.ndim == 0 else val


def squeezed_vacuum_char(epsilon: float, lam) -> np.ndarray | float:
    """Single-mode squeezed-vacuum characteristic function.

    The orientation puts ``e^{+2 epsilon}`` on the tau quadrature:
    ``exp(-(tau^2 e^{2 eps} + sigma^2 e^{-2 eps})/4)``.
    """
    lam = np.asarray(lam, dtype=float)
    tau, sig = lam[..., 0], lam[..., 1]
    val = np.exp(-0.25 * (tau**2 * np.exp(2 * epsilon) + sig**2 * np.exp(-2 * epsilon)))
    return float(val) if val.ndim == 0 else val


def laguerre(n: int, x) -> np.ndarray | float:
    """Laguerre polynomial ``L_n(x)`` by the three-term recurrence (vectorized in ``x``)."""
    if n < 0:
        raise ValueError(f"Laguerre order must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return float(prev) if prev.ndim == 0 else prev
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return float(cur) if cur.ndim == 0 else cur


def fock_char(n: int, lam) -> np.ndarray | float:
    """Characteristic function of the Fock state ``|n>``.

    Gaussian envelope times ``L_n((tau^2 + sigma^2)/2)``.
    """
    if n < 0:
        raise ValueError(f"photon number must be non-negative, got {n}")
    lam = np.asarray(lam, dtype=float)
    tau, sig = lam[..., 0], lam[..., 1]
    s = 0.5 * (tau**2 + sig**2)
    val = np.exp(-0.5 * s) * laguerre(n, s)
    return float(val) if val.ndim == 0 else val
