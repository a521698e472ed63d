"""Dimer Hamiltonian and its instantaneous eigensystem.

Bare basis ordering used everywhere in the package::

    0: |ee>   1: |eg>   2: |ge>   3: |gg>

where the first letter refers to the donor (pigment 1) and the second to the
acceptor (pigment 2).

Eigenvalue labels follow the convention ``eps2 >= eps3 >= eps4 >= eps1``; the
arrays stored on :class:`EigenFrame` are indexed by ``label - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EE, EG, GE, GG = range(4)
BARE_LABELS = ("ee", "eg", "ge", "gg")

# sigma_z of each pigment in the bare basis (diagonal entries)
SIGMA_Z1 = np.array([1.0, 1.0, -1.0, -1.0])
SIGMA_Z2 = np.array([1.0, -1.0, 1.0, -1.0])

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10

# label order from the top of the spectrum down: eps2, eps3, eps4, eps1
_LABEL_FROM_RANK = (1, 2, 3, 0)

# the six level gaps, listed as (upper, lower) labels
GAP_PAIRS = ((2, 1), (2, 3), (2, 4), (3, 1), (3, 4), (4, 1))


class NotHermitianError(ValueError):
    pass


class NegativeRadicand(ArithmeticError):
    pass


@dataclass(frozen=True)
class DimerParams:
    """Physical constants of the dimer and its two baths.

    All energies are in units of the calculation unit omega (hbar = k_B = 1).
    """

    omega1: float = 1.0
    omega2: float = 1.0
    J: float = 1.5
    kappa1: float = 0.1
    kappa2: float = 0.1
    T1: float = 0.1
    T2: float = 0.1

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError("omega1 and omega2 must be positive")
        if self.J < 0:
            raise ValueError("J must be non-negative")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("bath couplings must be non-negative")
        if not (self.T1 > 0 and self.T2 > 0):
            raise ValueError("bath temperatures must be positive")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.omega1, self.omega2, self.J, self.kappa1, self.kappa2, self.T1, self.T2]
        )


def bare_hamiltonian(p: DimerParams) -> np.ndarray:
    """Free pigments plus the exchange coupling, H1 + H2."""
    w1, w2 = p.omega1, p.omega2
    H = np.diag([0.5 * (w1 + w2), 0.5 * (w1 - w2), 0.5 * (w2 - w1), -0.5 * (w1 + w2)])
    H = H.astype(complex)
    H[EG, GE] = H[GE, EG] = p.J
    return H


def drive_hamiltonian(p: DimerParams, E: complex) -> np.ndarray:
    """Donor drive ``E sigma_+^(1) + E* sigma_-^(1)``.

    ``sigma_+^(1)`` raises the donor irrespective of the acceptor, so the drive
    couples |gg> -> |eg> and |ge> -> |ee>.
    """
    H = np.zeros((4, 4), dtype=complex)
    H[EG, GG] = H[EE, GE] = E
    H[GG, EG] = H[GE, EE] = np.conj(E)
    return H


def total_hamiltonian(p: DimerParams, E: complex = 0.0) -> np.ndarray:
    return bare_hamiltonian(p) + drive_hamiltonian(p, E)


@dataclass(frozen=True)
class EigenFrame:
    """Labelled eigensystem of the dimer Hamiltonian at one instant.

    Attributes
    ----------
    eps : (4,) array
        Eigenvalues, ``eps[i-1]`` holds label ``eps_i``.
    U : (4, 4) complex array
        Eigenvectors as columns (bare components), same label order, so that
        ``H = U @ diag(eps) @ U^dagger`` and ``rho_bare = U rho_eig U^dagger``.
    s1, s2 : (4, 4) complex arrays
        ``sigma_z`` of pigment 1 and 2 expressed in the eigenbasis.
    gaps : (6,) array
        Level gaps for the pairs in :data:`GAP_PAIRS`.
    """

    eps: np.ndarray
    U: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    gaps: np.ndarray
    time: float = 0.0

    def gap(self, upper: int, lower: int) -> float:
        return float(self.eps[upper - 1] - self.eps[lower - 1])


def s_coefficients(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of sigma_z^(1) and sigma_z^(2) in the eigenbasis.

    ``U`` has the eigenvectors as columns. The expansion coefficients ``u_ij``
    of the bare states on the eigenstates are the complex conjugates of those
    columns, so

        s1_ij = u_1i u_1j* + u_2i u_2j* - u_3i u_3j* - u_4i u_4j*
        s2_ij = u_1i u_1j* - u_2i u_2j* + u_3i u_3j* - u_4i u_4j*

    with ``u = conj(U)``, which equals ``<eps_i| sigma_z |eps_j>``.
    """
    u = np.conj(np.asarray(U, dtype=complex))
    outer = u[:, :, None] * u[:, None, :].conj()  # outer[n, i, j] = u_ni u_nj*
    s1 = np.tensordot(SIGMA_Z1, outer, axes=1)
    s2 = np.tensordot(SIGMA_Z2, outer, axes=1)
    return s1, s2


def _fix_gauge(v: np.ndarray) -> np.ndarray:
    mag = np.abs(v)
    # first component within rounding of the maximum, so ties resolve the same way every call
    k = int(np.argmax(mag >= mag.max() - 1e-9))
    return v * (np.conj(v[k]) / mag[k])


def _label_order(evals: np.ndarray, evecs: np.ndarray) -> list[int]:
    """Column indices of ``evecs`` in label order eps1..eps4."""
    scale = max(1.0, float(np.abs(evals).max()))
    groups = np.zeros(4, dtype=int)
    for k in range(1, 4):
        close = evals[k] - evals[k - 1] <= DEGENERACY_TOL * scale
        groups[k] = groups[k - 1] if close else groups[k - 1] + 1
    dominant = [int(np.argmax(np.abs(evecs[:, k]) >= np.abs(evecs[:, k]).max() - 1e-9))
                for k in range(4)]
    ranked = sorted(range(4), key=lambda k: (-groups[k], dominant[k]))
    order = [0] * 4
    for rank, k in enumerate(ranked):
        order[_LABEL_FROM_RANK[rank]] = k
    return order


def eigensystem(H: np.ndarray, time: float = 0.0,
                previous: EigenFrame | None = None) -> EigenFrame:
    """Diagonalise ``H`` and label the eigenpairs.

    Eigenvalues are labelled so that ``eps2 >= eps3 >= eps4 >= eps1``. Equal
    eigenvalues are ordered by the position of their dominant bare component.
    Each eigenvector is rephased so that its largest component is real and
    positive; when ``previous`` is given the columns are instead rephased to
    have real-positive overlap with the previous frame's columns, which keeps
    eigenvector phases continuous along a trajectory.
    """
    H = np.asarray(H, dtype=complex)
    if H.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {H.shape}")
    if np.abs(H - H.conj().T).max() > HERMITIAN_TOL:
        raise NotHermitianError("Hamiltonian is not Hermitian")
    evals, evecs = np.linalg.eigh(H)
    order = _label_order(evals, evecs)
    eps = evals[order]
    U = evecs[:, order]
    for k in range(4):
        if previous is not None:
            ov = np.vdot(previous.U[:, k], U[:, k])
            if abs(ov) > 1e-6:
                U[:, k] *= np.conj(ov) / abs(ov)
                continue
        U[:, k] = _fix_gauge(U[:, k])
    s1, s2 = s_coefficients(U)
    gaps = np.array([eps[i - 1] - eps[j - 1] for i, j in GAP_PAIRS])
    return EigenFrame(eps=eps, U=U, s1=s1, s2=s2, gaps=gaps, time=time)


def closed_form_eigenvalues(p: DimerParams, E: complex = 0.0) -> np.ndarray:
    """Analytic spectrum of the driven dimer, returned as ``[eps1, eps2, eps3, eps4]``.

    Test oracle for :func:`eigensystem`; not used on the integration path
    because the inner radicand cancels badly near degeneracies.

        a0 = sqrt(4|E|^2 (J^2 + w2^2) + (J^2 - w1 w2)^2)
        a1 = 2 J^2 + 4 |E|^2 + w1^2 + w2^2
        eps1,2 = -/+ sqrt(a1 + 2 a0) / 2,   eps3,4 = +/- sqrt(a1 - 2 a0) / 2
    """
    w1, w2, J = p.omega1, p.omega2, p.J
    e2 = abs(E) ** 2
    a0 = np.sqrt(4 * e2 * (J**2 + w2**2) + (J**2 - w1 * w2) ** 2)
    a1 = 2 * J**2 + 4 * e2 + w1**2 + w2**2
    inner = a1 - 2 * a0
    if inner < 0:
        if inner < -1e-12 * max(1.0, a1):
            raise NegativeRadicand(f"a1 - 2 a0 = {inner:.3e}")
        inner = 0.0
    outer = 0.5 * np.sqrt(a1 + 2 * a0)
    middle = 0.5 * np.sqrt(inner)
    return np.array([-outer, outer, middle, -middle])
