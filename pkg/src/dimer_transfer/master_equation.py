"""Dissipative dynamics in the instantaneous eigenbasis.

Two integration routes are provided:

``full``
    The Lindblad equation ``drho/dt = -i[H_M(t), rho] + L rho`` with the
    dissipator built from the twelve jump operators between instantaneous
    eigenstates. The state is carried in the bare basis; H_M(t), the frame and
    the rates are re-evaluated at every RK4 stage.
``reduced``
    Population rate equations (3x3 matrix M, vector R) plus exponentially
    decaying coherences, evaluated in an eigenframe frozen at each step
    midpoint. Kept as an independent cross-check of ``full``.

Jump operators, as (to, from) eigenstate labels::

    pi_1 = |3><2|  pi_2 = |4><2|  pi_3 = |1><2|
    pi_4 = |4><3|  pi_5 = |1><3|  pi_6 = |1><4|     pi_{m+6} = pi_m^dagger

Rate ``xi_m`` belongs to the gap of ``pi_m``; downward jumps carry ``N + 1``,
upward ones ``N``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .hamiltonian import DimerParams, EigenFrame, eigensystem, total_hamiltonian
from .observables import (
    DensityState,
    ObservableSample,
    bare_populations,
    concurrence_batch,
    total_efficiency,
)
from .pulse import PulseTrain, amplitude, cumulative_energy, integration_plan

log = logging.getLogger(__name__)

Route = Literal["full", "reduced"]

JUMP_PAIRS = ((3, 2), (4, 2), (1, 2), (4, 3), (1, 3), (1, 4))
ZERO_GAP = 1e-9
POSITIVITY_TOL = 1e-6
MAX_HALVINGS = 20


class StepRejected(RuntimeError):
    def __init__(self, time: float, min_eig: float):
        super().__init__(f"positivity lost at t={time:.6g} (min eigenvalue {min_eig:.3e})")
        self.time = time
        self.min_eig = min_eig


class IntegrationFailed(RuntimeError):
    def __init__(self, time: float, trajectory: Trajectory | None = None):
        super().__init__(f"integration failed at t={time:.6g}")
        self.time = time
        self.trajectory = trajectory


def bose_occupation(gap, T):
    """Bose-Einstein occupation ``1/(exp(gap/T) - 1)``."""
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(np.asarray(gap, dtype=float) / T)


@dataclass(frozen=True)
class LindbladRates:
    xi: np.ndarray
    gap_map: tuple[tuple[int, int], ...] = JUMP_PAIRS + tuple((b, a) for a, b in JUMP_PAIRS)

    def __getitem__(self, m: int) -> float:
        """1-based access, ``rates[3]`` is xi_3."""
        return float(self.xi[m - 1])

    def loss(self) -> np.ndarray:
        """Total out-rates eta_1..eta_4 of each eigenstate."""
        eta = np.zeros(4)
        for xi, (_, src) in zip(self.xi, self.gap_map):
            eta[src - 1] += xi
        return eta


def rates(frame: EigenFrame, p: DimerParams) -> LindbladRates:
    """Bath-induced transition rates between the instantaneous eigenstates."""
    xi = np.zeros(12)
    kappas = (p.kappa1, p.kappa2)
    temps = (p.T1, p.T2)
    for m, (a, b) in enumerate(JUMP_PAIRS):
        gap = frame.eps[b - 1] - frame.eps[a - 1]
        if gap < ZERO_GAP:
            continue
        for kappa, T, s in zip(kappas, temps, (frame.s1, frame.s2)):
            # s_ab s_ba = |s_ab|^2 for a Hermitian s
            weight = kappa * float((s[a - 1, b - 1] * s[b - 1, a - 1]).real)
            n = float(bose_occupation(gap, T))
            xi[m] += gap * weight * (n + 1)
            xi[m + 6] += gap * weight * n
    return LindbladRates(xi=xi)


def jump_operators(frame: EigenFrame, basis: Literal["eigen", "bare"] = "eigen") -> np.ndarray:
    """The twelve jump operators, shape (12, 4, 4)."""
    ops = np.zeros((12, 4, 4), dtype=complex)
    for m, (a, b) in enumerate(JUMP_PAIRS):
        ops[m, a - 1, b - 1] = 1.0
        ops[m + 6, b - 1, a - 1] = 1.0
    if basis == "bare":
        U = frame.U
        ops = U @ ops @ U.conj().T
    return ops


def lindblad_superoperator(r: LindbladRates, frame: EigenFrame,
                           state: DensityState) -> np.ndarray:
    """``L rho = -sum_mu xi_mu ({pi_mu^+ pi_mu, rho} - 2 pi_mu rho pi_mu^+)``, eigenbasis."""
    rho = state.require("eigen")
    out = np.zeros((4, 4), dtype=complex)
    for xi, pi in zip(r.xi, jump_operators(frame)):
        if xi == 0.0:
            continue
        pd = pi.conj().T
        pdp = pd @ pi
        out -= xi * (pdp @ rho + rho @ pdp - 2 * pi @ rho @ pd)
    return out


def full_rhs(t: float, rho: np.ndarray, p: DimerParams, train: PulseTrain) -> np.ndarray:
    """Right-hand side of the full master equation, bare basis in and out."""
    H = total_hamiltonian(p, amplitude(train, t))
    frame = eigensystem(H, t)
    U = frame.U
    r = DensityState(U.conj().T @ rho @ U, "eigen", t)
    diss = lindblad_superoperator(rates(frame, p), frame, r)
    return -1j * (H @ rho - rho @ H) + U @ diss @ U.conj().T


def _min_eig(rho: np.ndarray) -> float:
    lo = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return lo if np.isfinite(lo) else -np.inf


def _check_positive(rho: np.ndarray, t: float) -> None:
    lo = _min_eig(rho)
    if lo < -POSITIVITY_TOL:
        raise StepRejected(t, lo)


def step_full(state: DensityState, p: DimerParams, train: PulseTrain,
              t: float, dt: float) -> DensityState:
    """One RK4 step of the full master equation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho = state.require("bare")
    k1 = full_rhs(t, rho, p, train)
    k2 = full_rhs(t + dt / 2, rho + dt / 2 * k1, p, train)
    k3 = full_rhs(t + dt / 2, rho + dt / 2 * k2, p, train)
    k4 = full_rhs(t + dt, rho + dt * k3, p, train)
    new = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    tr = np.trace(new).real
    if abs(tr - 1) > 1e-12:
        new = new / tr
    _check_positive(new, t + dt)
    return DensityState(new, "bare", t + dt)


# ---------------------------------------------------------------- reduced route

COHERENCE_PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))


@dataclass(frozen=True)
class ReducedState:
    """Eigenbasis state as populations plus upper-triangle coherences.

    ``X`` holds the populations of eigenstates 2, 3 and 4, the three the
    rate matrix acts on; eigenstate 1 carries the remainder of the trace.
    """

    X: np.ndarray
    coherences: np.ndarray
    time: float = 0.0

    @property
    def rho11(self) -> float:
        return float(1.0 - np.sum(self.X))

    @classmethod
    def from_density(cls, state: DensityState) -> ReducedState:
        r = state.require("eigen")
        X = np.real(np.diag(r))[1:].copy()
        coh = np.array([r[k - 1, l - 1] for k, l in COHERENCE_PAIRS])
        return cls(X=X, coherences=coh, time=state.time)

    def to_density(self) -> DensityState:
        r = np.zeros((4, 4), dtype=complex)
        r[0, 0] = self.rho11
        r[1, 1], r[2, 2], r[3, 3] = self.X
        for c, (k, l) in zip(self.coherences, COHERENCE_PAIRS):
            r[k - 1, l - 1] = c
            r[l - 1, k - 1] = np.conj(c)
        return DensityState(r, "eigen", self.time)


def reduced_coefficients(r: LindbladRates, verbatim: bool = True):
    """``(eta, M, R)`` for ``dX/dt = -M X + R``.

    With ``verbatim=False`` the third row uses ``eta4`` and ``+xi12``, the
    values that make the populations sum to one.
    """
    return _kernels.reduced_coefficients(np.asarray(r.xi, dtype=float), verbatim)


def step_reduced(state: ReducedState, frame: EigenFrame, r: LindbladRates,
                 dt: float, verbatim: bool = True) -> ReducedState:
    """One RK4 step of the reduced equations in a frozen eigenframe."""
    eta, M, R = reduced_coefficients(r, verbatim)
    rho = state.to_density().rho
    new = _kernels.rk4_reduced_frozen(rho, dt, np.asarray(frame.eps, float), eta, M, R)
    return ReducedState.from_density(DensityState(new, "eigen", state.time + dt))


# ---------------------------------------------------------------- trajectories

def ground_state() -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    rho[3, 3] = 1.0
    return rho


@dataclass
class Trajectory:
    """Sampled solution of one run plus the derived observables."""

    route: str
    times: np.ndarray
    rho: np.ndarray  # (n, 4, 4), bare basis
    energy: np.ndarray
    params: DimerParams
    train: PulseTrain
    status: str = "ok"
    failure_time: float | None = None
    eig_rho: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.eig_rho = _eigen_frames_rho(self.params, self.train, self.times, self.rho)

    def __len__(self):
        return len(self.times)

    @property
    def pops(self) -> np.ndarray:
        return bare_populations(self.rho)

    @property
    def eig_pops(self) -> np.ndarray:
        return bare_populations(self.eig_rho)

    @property
    def P(self) -> np.ndarray:
        pops = self.pops
        return pops[:, 0] + pops[:, 2]

    @property
    def eta_total(self) -> np.ndarray:
        return total_efficiency(self.P, self.params, self.energy)

    @property
    def concurrence(self) -> np.ndarray:
        return concurrence_batch(self.rho)

    def sample(self, k: int) -> ObservableSample:
        """All observables at output sample ``k``."""
        rho = self.rho[k : k + 1]
        return ObservableSample(
            t=float(self.times[k]),
            P=float(self.P[k]),
            eta_total=float(np.atleast_1d(self.eta_total)[k]),
            C=float(concurrence_batch(rho)[0]),
            pops=self.pops[k],
            eig_pops=self.eig_pops[k],
        )

    def trace_error(self) -> np.ndarray:
        return np.abs(np.trace(self.rho, axis1=1, axis2=2) - 1.0)

    def hermiticity_error(self) -> np.ndarray:
        return np.abs(self.rho - np.conj(np.transpose(self.rho, (0, 2, 1)))).max(axis=(1, 2))

    def min_eigenvalue(self) -> np.ndarray:
        herm = 0.5 * (self.rho + np.conj(np.transpose(self.rho, (0, 2, 1))))
        return np.linalg.eigvalsh(herm).min(axis=1)

    def window(self, t0: float, t1: float) -> np.ndarray:
        return (self.times >= t0) & (self.times <= t1)


def _eigen_frames_rho(p: DimerParams, train: PulseTrain, times, rho) -> np.ndarray:
    E = amplitude(train, times) if len(train) else np.zeros(len(times), complex)
    E = np.atleast_1d(E)
    H = np.broadcast_to(total_hamiltonian(p), (len(times), 4, 4)).copy()
    H[:, 1, 3] = H[:, 0, 2] = E
    H[:, 3, 1] = H[:, 2, 0] = np.conj(E)
    _, vecs = np.linalg.eigh(H)
    U = vecs[:, :, list(_kernels.LABEL_COLUMNS)]
    return np.conj(np.transpose(U, (0, 2, 1))) @ rho @ U


def _free_generator(route: Route, p: DimerParams, verbatim: bool) -> np.ndarray:
    """16x16 generator of the undriven dynamics (row-major vectorisation)."""
    params = p.as_array()
    H = _kernels.hamiltonian(params, 0j)
    eps, U = _kernels.frame(H)
    xi = _kernels.rates(eps, U, params)
    Ud = U.conj().T
    G = np.zeros((16, 16), dtype=complex)
    for idx in range(16):
        basis = np.zeros(16, dtype=complex)
        basis[idx] = 1.0
        rho = basis.reshape(4, 4)
        if route == "full":
            d = _kernels.full_rhs(rho, H, U, xi)
        else:
            eta, M, R = _kernels.reduced_coefficients(xi, verbatim)
            d = U @ _kernels.reduced_rhs(Ud @ rho @ U, eps, eta, M, R) @ Ud
        G[:, idx] = d.reshape(16)
    return G


def evolve(p: DimerParams, train: PulseTrain, t_span: tuple[float, float],
           dt: float = 1e-3, route: Route = "full", sample_interval: float = 0.05,
           rho0: np.ndarray | None = None, exact_free: bool = True,
           verbatim: bool = True, check_positivity: bool | None = None) -> Trajectory:
    """Integrate from ``rho0`` (default |gg><gg|) over ``t_span``.

    On intervals where every pulse is negligible (beyond eight widths from
    its center) and ``exact_free`` is set, the constant generator is
    exponentiated instead of stepped. Elsewhere RK4 substeps of at most
    ``dt`` are used, refined to ``tau_p/10`` near pulse centers and halved
    further when positivity is lost.

    Positivity is enforced on the full route only by default. The verbatim
    reduced equations do not preserve it, so there a violation says nothing
    about the step size.
    """
    if route not in ("full", "reduced"):
        raise ValueError(f"unknown route {route!r}")
    if check_positivity is None:
        check_positivity = route == "full"
    t0, t1 = map(float, t_span)
    plan = integration_plan(train, t0, t1, dt, sample_interval, exact_free=exact_free)
    times = plan.times
    energy = cumulative_energy(train, plan)
    params = p.as_array()
    E0, tau, tc, Om = train.as_arrays()

    rho = ground_state() if rho0 is None else np.array(rho0, dtype=complex)
    out = np.empty((len(times), 4, 4), dtype=complex)
    out[0] = rho

    generator = None
    propagators: dict[float, np.ndarray] = {}

    def advance(rho, a, b, n):
        h = (b - a) / n
        if route == "full":
            return _kernels.rk4_full(rho, a, h, n, params, E0, tau, tc, Om)
        return _kernels.rk4_reduced(rho, a, h, n, params, E0, tau, tc, Om, verbatim)

    def _fail(k):
        traj = Trajectory(route, times[: k + 1], out[: k + 1], energy[: k + 1], p, train,
                          status="failed", failure_time=float(times[k]))
        raise IntegrationFailed(float(times[k]), traj)

    for k in range(len(times) - 1):
        a, b = times[k], times[k + 1]
        n = int(plan.substeps[k])
        if n == 0:
            if generator is None:
                generator = _free_generator(route, p, verbatim)
            key = round(b - a, 12)
            if key not in propagators:
                propagators[key] = expm(generator * (b - a))
            new = (propagators[key] @ rho.reshape(16)).reshape(4, 4)
        else:
            new = advance(rho, a, b, n)
            if check_positivity:
                lo = _min_eig(new)
                halving = 0
                while lo < -POSITIVITY_TOL:
                    if halving == MAX_HALVINGS:
                        _fail(k)
                    halving += 1
                    log.debug("positivity lost on [%g, %g] (%.3e); halving", a, b, lo)
                    new = advance(rho, a, b, n * 2**halving)
                    previous, lo = lo, _min_eig(new)
                    # a violation that finer steps do not shrink is not a step-size effect
                    if lo < -POSITIVITY_TOL and lo <= previous + 1e-3 * abs(previous):
                        _fail(k)
        rho = 0.5 * (new + new.conj().T)
        out[k + 1] = rho

    return Trajectory(route, times, out, energy, p, train)
