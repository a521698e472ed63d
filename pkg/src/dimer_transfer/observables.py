"""Acceptor population, total efficiency and concurrence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .hamiltonian import EE, GE, DimerParams, EigenFrame

Basis = Literal["eigen", "bare"]

_SY = np.array([[0, -1j], [1j, 0]])
SPIN_FLIP = np.kron(_SY, _SY)

# acceptor excited: |ee> and |ge>
ACCEPTOR_EXCITED = np.diag([1.0, 0.0, 1.0, 0.0])


class BasisMismatch(ValueError):
    pass


@dataclass(frozen=True)
class DensityState:
    rho: np.ndarray
    basis: Basis = "bare"
    time: float = 0.0

    def __post_init__(self):
        if self.basis not in ("eigen", "bare"):
            raise ValueError(f"unknown basis {self.basis!r}")
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=complex))

    def require(self, basis: Basis) -> np.ndarray:
        if self.basis != basis:
            raise BasisMismatch(f"expected a {basis}-basis state, got {self.basis}")
        return self.rho


@dataclass(frozen=True)
class ObservableSample:
    t: float
    P: float
    eta_total: float
    C: float
    pops: np.ndarray
    eig_pops: np.ndarray


def to_bare(state: DensityState, frame: EigenFrame) -> DensityState:
    """Rotate an eigenbasis state back to the bare basis.

    sigma_ij = sum_kl u_jk u_il^* rho_lk with ``u = conj(frame.U)``.
    """
    rho = state.require("eigen")
    u = np.conj(frame.U)
    sigma = np.einsum("jk,il,lk->ij", u, u.conj(), rho)
    return DensityState(sigma, "bare", state.time)


def to_eigen(state: DensityState, frame: EigenFrame) -> DensityState:
    rho = state.require("bare")
    U = frame.U
    return DensityState(U.conj().T @ rho @ U, "eigen", state.time)


def acceptor_probability(sigma: DensityState | np.ndarray) -> float:
    """P = <ee|sigma|ee> + <ge|sigma|ge>."""
    rho = sigma.require("bare") if isinstance(sigma, DensityState) else np.asarray(sigma)
    return float(rho[EE, EE].real + rho[GE, GE].real)


def total_efficiency(P, p: DimerParams, pulse_energy):
    """omega2 * P / (pulse energy delivered so far); zero before any energy arrives.

    Not clamped: the ratio can exceed one.
    """
    P = np.asarray(P, dtype=float)
    energy = np.asarray(pulse_energy, dtype=float)
    safe = np.where(energy < 1e-15, 1.0, energy)
    eta = np.where(energy < 1e-15, 0.0, p.omega2 * P / safe)
    return float(eta) if eta.ndim == 0 else eta


def spin_flip(rho: np.ndarray) -> np.ndarray:
    return SPIN_FLIP @ np.conj(rho) @ SPIN_FLIP


def concurrence(sigma: DensityState | np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = sigma.require("bare") if isinstance(sigma, DensityState) else np.asarray(sigma)
    return float(concurrence_batch(rho[None])[0])


def concurrence_batch(rhos: np.ndarray) -> np.ndarray:
    """Concurrence for a stack of density matrices, shape (n, 4, 4).

    With ``rho = B B^+`` the Wootters lambdas (square roots of the spectrum of
    ``rho rho~``) are the singular values of ``B^T (sy x sy) B``. Going through
    an SVD keeps small lambdas accurate instead of taking square roots of
    eigenvalues that are at rounding level.
    """
    rhos = np.asarray(rhos, dtype=complex)
    herm = 0.5 * (rhos + np.conj(np.swapaxes(rhos, -1, -2)))
    w, v = np.linalg.eigh(herm)
    B = v * np.sqrt(np.clip(w, 0.0, None))[..., None, :]
    lam = np.linalg.svd(np.swapaxes(B, -1, -2) @ SPIN_FLIP @ B, compute_uv=False)
    return np.maximum(0.0, lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3])


def bare_populations(rhos: np.ndarray) -> np.ndarray:
    return np.real(np.diagonal(rhos, axis1=-2, axis2=-1))


def saturation_value(times: np.ndarray, values: np.ndarray, fraction: float = 0.1) -> float:
    """Mean over the final ``fraction`` of the time span."""
    times = np.asarray(times)
    cut = times[-1] - fraction * (times[-1] - times[0])
    tail = np.asarray(values)[times >= cut]
    return float(np.mean(tail))


def tail_slope(times: np.ndarray, values: np.ndarray, fraction: float = 0.1) -> float:
    """Least-squares slope over the final ``fraction`` of the time span."""
    times = np.asarray(times)
    cut = times[-1] - fraction * (times[-1] - times[0])
    mask = times >= cut
    if mask.sum() < 2:
        return 0.0
    return float(np.polyfit(times[mask], np.asarray(values)[mask], 1)[0])
