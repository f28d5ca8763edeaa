"""Quantum counterparts: the Omega superoperator, quantum eCRB matrix and pure-state QFI.

Omega_rho(X) = sum_ij 2 / (p_i + p_j) |i><i| X |j><j| for a full-rank
rho = sum_i p_i |i><i|.  Omega_rho applied to d(rho) is the symmetric
logarithmic derivative, so the 1x1 quantum eCRB matrix is the QFI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .engine import DEFAULT_TOL, BoundResult, Tolerances, evaluate_bound
from .errors import BoundsError, RankDeficientStateError, TruncationError

LEAKAGE_TOL = 1e-10
FOCK_TRUNCATION = 60


@dataclass(frozen=True, eq=False)
class DensityEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, rho, atol: float = 1e-12) -> "DensityEigen":
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise BoundsError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > atol:
            raise BoundsError("density matrix is not Hermitian")
        p, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        if p.min() < -atol:
            raise BoundsError(f"density matrix has negative eigenvalue {p.min():.3e}")
        if abs(p.sum() - 1.0) > atol:
            raise BoundsError(f"density matrix trace {p.sum()!r} differs from 1")
        return cls(np.clip(p, 0.0, None), V)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def matrix(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def omega_apply(rho: DensityEigen, X, tau_rank: float = DEFAULT_TOL.tau_rank) -> np.ndarray:
    p = rho.eigenvalues
    if p.min() <= tau_rank:
        raise RankDeficientStateError(
            f"rank-deficient state (smallest eigenvalue {p.min():.3e}); regularize first"
        )
    X = np.asarray(X, dtype=complex)
    if X.shape != (rho.dim, rho.dim):
        raise BoundsError(f"operator shape {X.shape} does not match state dimension {rho.dim}")
    if np.max(np.abs(X - X.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(X))):
        raise BoundsError("operator is not Hermitian")
    V = rho.eigenvectors
    Xe = V.conj().T @ X @ V
    Xe *= 2.0 / (p[:, None] + p[None, :])
    return V @ Xe @ V.conj().T


class StateFamily(Protocol):
    def rho(self, theta: float) -> np.ndarray: ...

    def drho(self, theta: float) -> np.ndarray: ...


@dataclass(frozen=True)
class QubitFamily:
    """rho(theta) = (I + r cos(theta) sigma_z) / 2."""

    r: float = 0.5

    def rho(self, theta: float) -> np.ndarray:
        c = self.r * math.cos(theta)
        return np.diag([0.5 * (1 + c), 0.5 * (1 - c)]).astype(complex)

    def drho(self, theta: float) -> np.ndarray:
        s = 0.5 * self.r * math.sin(theta)
        return np.diag([-s, s]).astype(complex)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    damplitudes: np.ndarray

    def norm_deficit(self) -> float:
        return abs(1.0 - float(np.vdot(self.amplitudes, self.amplitudes).real))


@dataclass(frozen=True)
class RegularizedPureFamily:
    """(1 - eps) |psi_theta><psi_theta| + eps I / d on the truncated space."""

    state: Callable[[float], PureState]
    eps: float

    def _psi(self, theta):
        st = self.state(theta)
        norm = np.linalg.norm(st.amplitudes)
        return st.amplitudes / norm, st.damplitudes / norm

    def rho(self, theta: float) -> np.ndarray:
        psi, _ = self._psi(theta)
        d = psi.shape[0]
        return (1 - self.eps) * np.outer(psi, psi.conj()) + self.eps * np.eye(d) / d

    def drho(self, theta: float) -> np.ndarray:
        psi, dpsi = self._psi(theta)
        return (1 - self.eps) * (np.outer(dpsi, psi.conj()) + np.outer(psi, dpsi.conj()))


def q_ecrb_matrix(
    family: StateFamily, test_points, theta: float, tau_rank: float = DEFAULT_TOL.tau_rank
) -> np.ndarray:
    """Q_kl = Tr[ d(rho)|_{theta_k} Omega_{rho(theta)}( d(rho)|_{theta_l} ) ]."""
    rho = DensityEigen.from_matrix(family.rho(theta))
    derivs = [np.asarray(family.drho(t), dtype=complex) for t in np.atleast_1d(test_points)]
    omegas = [omega_apply(rho, D, tau_rank) for D in derivs]
    n = len(derivs)
    Q = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            Q[k, l] = np.trace(derivs[k] @ omegas[l]).real
    return 0.5 * (Q + Q.T)


def quantum_ecrb(
    family: StateFamily, test_points, theta: float, tol: Tolerances = DEFAULT_TOL
) -> BoundResult:
    """Measurement-optimized extended CRB: lam^T Q^+ lam with lam_k = 1."""
    Q = q_ecrb_matrix(family, test_points, theta, tol.tau_rank)
    return evaluate_bound(Q, np.ones(Q.shape[0]), tol)


def qfi_pure(psi: PureState, tol: float = LEAKAGE_TOL) -> float:
    """4 (<dpsi|dpsi> - |<dpsi|psi>|^2)."""
    if psi.norm_deficit() > tol:
        raise TruncationError(
            f"state norm deficit {psi.norm_deficit():.3e} exceeds {tol:g}; increase truncation"
        )
    d, a = psi.damplitudes, psi.amplitudes
    return float(4.0 * (np.vdot(d, d).real - abs(np.vdot(d, a)) ** 2))


def _coherent_log_amp(n: np.ndarray, mu: float) -> np.ndarray:
    return -0.5 * mu + 0.5 * n * math.log(mu) - 0.5 * gammaln(n + 1.0)


def coherent_state(
    theta: float, truncation: int = FOCK_TRUNCATION, tol: float = LEAKAGE_TOL
) -> PureState:
    """Coherent state with mean photon number mu = -ln(theta), Fock basis 0..truncation.

    |c_n|^2 is the Poisson distribution with p(0) = theta.  Raises
    TruncationError when either the discarded probability or the discarded
    squared norm of the derivative exceeds ``tol``.
    """
    if not (0.0 < theta < 1.0):
        raise BoundsError(f"theta must lie in (0, 1), got {theta!r}")
    mu = -math.log(theta)
    n = np.arange(truncation + 1, dtype=float)
    amp = np.exp(_coherent_log_amp(n, mu))
    # d c_n / d theta = c_n (n / (2 mu) - 1/2) * d mu / d theta
    damp = amp * (n / (2.0 * mu) - 0.5) * (-1.0 / theta)

    leak = float(poisson.sf(truncation, mu))
    tail_n = np.arange(truncation + 1, truncation + 400, dtype=float)
    tail = np.exp(2 * _coherent_log_amp(tail_n, mu)) * ((tail_n / (2 * mu) - 0.5) / theta) ** 2
    dleak = float(tail.sum())
    if leak > tol or dleak > tol:
        raise TruncationError(
            f"Fock truncation {truncation} leaks {max(leak, dleak):.3e} at theta={theta}"
        )
    return PureState(amp.astype(complex), damp.astype(complex))
