"""Compiled RK4 loops for the drive-on stretches of a trajectory.

These mirror the reference numpy implementations in
:mod:`dimer_transfer.master_equation` step for step; the test-suite checks
that the two agree. Parameters travel as a flat float array
``[omega1, omega2, J, kappa1, kappa2, T1, T2]`` and the pulse train as four
arrays ``(E0, tau_p, t_center, Omega)``.

Eigenvalue labels are assigned by energy only (eps1 lowest, then eps4, eps3,
eps2); the dissipator is independent of eigenvector phases, so no gauge
fixing is needed here.
"""

import numpy as np
from numba import njit

# (to, from) label indices (label - 1) of the six downward jumps pi_1..pi_6
JUMP_TO = np.array([2, 3, 0, 3, 0, 0])
JUMP_FROM = np.array([1, 1, 1, 2, 2, 3])
# eigh returns ascending eigenvalues; column for labels eps1, eps2, eps3, eps4
LABEL_COLUMNS = np.array([0, 3, 2, 1])
ZERO_GAP = 1e-9


@njit(cache=True)
def drive_amplitude(t, E0, tau, tc, Om):
    re = 0.0
    im = 0.0
    for k in range(E0.shape[0]):
        x = (t - tc[k]) / tau[k]
        env = E0[k] / (np.sqrt(2.0 * np.pi) * tau[k]) * np.exp(-0.5 * x * x)
        ph = Om[k] * (t - tc[k])
        re += env * np.cos(ph)
        im += env * np.sin(ph)
    return re + 1j * im


@njit(cache=True)
def hamiltonian(params, E):
    w1 = params[0]
    w2 = params[1]
    H = np.zeros((4, 4), dtype=np.complex128)
    H[0, 0] = 0.5 * (w1 + w2)
    H[1, 1] = 0.5 * (w1 - w2)
    H[2, 2] = 0.5 * (w2 - w1)
    H[3, 3] = -0.5 * (w1 + w2)
    H[1, 2] = params[2]
    H[2, 1] = params[2]
    Ec = np.conj(E)
    H[1, 3] = E
    H[0, 2] = E
    H[3, 1] = Ec
    H[2, 0] = Ec
    return H


@njit(cache=True)
def frame(H):
    evals, evecs = np.linalg.eigh(H)
    eps = np.empty(4)
    U = np.empty((4, 4), dtype=np.complex128)
    for i in range(4):
        c = LABEL_COLUMNS[i]
        eps[i] = evals[c]
        for n in range(4):
            U[n, i] = evecs[n, c]
    return eps, U


@njit(cache=True)
def _bose(gap, T):
    return 1.0 / np.expm1(gap / T)


@njit(cache=True)
def rates(eps, U, params):
    """The twelve rates xi_1..xi_12 (downward jumps first)."""
    k1 = params[3]
    k2 = params[4]
    T1 = params[5]
    T2 = params[6]
    xi = np.zeros(12)
    for m in range(6):
        a = JUMP_TO[m]
        b = JUMP_FROM[m]
        gap = eps[b] - eps[a]
        if gap < ZERO_GAP:
            continue
        # <eps_a| sigma_z^(l) |eps_b>
        s1 = 0.0 + 0.0j
        s2 = 0.0 + 0.0j
        for n in range(4):
            prod = np.conj(U[n, a]) * U[n, b]
            z1 = 1.0 if n < 2 else -1.0
            z2 = 1.0 if (n == 0 or n == 2) else -1.0
            s1 += z1 * prod
            s2 += z2 * prod
        c1 = k1 * (s1.real * s1.real + s1.imag * s1.imag)
        c2 = k2 * (s2.real * s2.real + s2.imag * s2.imag)
        n1 = _bose(gap, T1)
        n2 = _bose(gap, T2)
        xi[m] = gap * (c1 * (n1 + 1.0) + c2 * (n2 + 1.0))
        xi[m + 6] = gap * (c1 * n1 + c2 * n2)
    return xi


@njit(cache=True)
def eigen_dissipator(r, xi):
    """Dissipator acting on an eigenbasis density matrix ``r``."""
    loss = np.zeros(4)
    gain = np.zeros(4)
    for m in range(6):
        a = JUMP_TO[m]
        b = JUMP_FROM[m]
        loss[b] += xi[m]
        loss[a] += xi[m + 6]
        gain[a] += 2.0 * xi[m] * r[b, b].real
        gain[b] += 2.0 * xi[m + 6] * r[a, a].real
    d = np.empty((4, 4), dtype=np.complex128)
    for k in range(4):
        for l in range(4):
            d[k, l] = -(loss[k] + loss[l]) * r[k, l]
        d[k, k] += gain[k]
    return d


@njit(cache=True)
def full_rhs(rho, H, U, xi):
    Ud = np.conj(U.T)
    r = Ud @ rho @ U
    d = eigen_dissipator(r, xi)
    return -1j * (H @ rho - rho @ H) + U @ d @ Ud


@njit(cache=True)
def _stage(t, params, E0, tau, tc, Om):
    H = hamiltonian(params, drive_amplitude(t, E0, tau, tc, Om))
    eps, U = frame(H)
    xi = rates(eps, U, params)
    return H, U, xi


@njit(cache=True)
def _renormalise(rho):
    tr = (rho[0, 0] + rho[1, 1] + rho[2, 2] + rho[3, 3]).real
    if abs(tr - 1.0) > 1e-12:
        rho = rho / tr
    return rho


@njit(cache=True)
def rk4_full(rho, t0, h, n, params, E0, tau, tc, Om):
    """``n`` RK4 steps of size ``h`` for the full master equation (bare basis)."""
    H0, U0, xi0 = _stage(t0, params, E0, tau, tc, Om)
    for i in range(n):
        t = t0 + i * h
        Hm, Um, xim = _stage(t + 0.5 * h, params, E0, tau, tc, Om)
        H1, U1, xi1 = _stage(t + h, params, E0, tau, tc, Om)
        k1 = full_rhs(rho, H0, U0, xi0)
        k2 = full_rhs(rho + 0.5 * h * k1, Hm, Um, xim)
        k3 = full_rhs(rho + 0.5 * h * k2, Hm, Um, xim)
        k4 = full_rhs(rho + h * k3, H1, U1, xi1)
        rho = _renormalise(rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        H0 = H1
        U0 = U1
        xi0 = xi1
    return rho


@njit(cache=True)
def reduced_coefficients(xi, verbatim):
    """Loss sums eta_1..eta_4, the 3x3 matrix M and the vector R.

    ``verbatim`` keeps the (3,3) entry as ``xi12 + eta3`` and the last
    component of R as ``-xi12``; otherwise they become ``xi12 + eta4`` and
    ``+xi12``, which is what population conservation requires.
    """
    x = np.zeros(13)
    x[1:] = xi  # 1-based alias
    eta = np.array([
        x[9] + x[11] + x[12],
        x[1] + x[2] + x[3],
        x[4] + x[5] + x[7],
        x[6] + x[8] + x[10],
    ])
    M = np.empty((3, 3))
    M[0, 0] = x[9] + eta[1]
    M[0, 1] = x[9] - x[7]
    M[0, 2] = x[9] - x[8]
    M[1, 0] = x[11] - x[1]
    M[1, 1] = x[11] + eta[2]
    M[1, 2] = x[11] - x[10]
    M[2, 0] = x[12] - x[2]
    M[2, 1] = x[12] - x[4]
    M[2, 2] = x[12] + (eta[2] if verbatim else eta[3])
    R = np.array([x[9], x[11], -x[12] if verbatim else x[12]])
    return eta, 2.0 * M, 2.0 * R


@njit(cache=True)
def reduced_rhs(r, eps, eta, M, R):
    """Reduced equations on an eigenbasis matrix.

    The 3x3 system acts on the populations of levels 2, 3, 4; level 1 takes
    up whatever keeps the trace fixed. Coherences follow the exponential law.
    """
    d = np.empty((4, 4), dtype=np.complex128)
    tr = (r[0, 0] + r[1, 1] + r[2, 2] + r[3, 3]).real
    X = np.array([r[1, 1].real, r[2, 2].real, r[3, 3].real])
    dX = -(M @ X) + R * tr
    for k in range(4):
        for l in range(4):
            if k != l:
                d[k, l] = -(eta[l] + eta[k] - 1j * (eps[l] - eps[k])) * r[k, l]
    d[1, 1] = dX[0]
    d[2, 2] = dX[1]
    d[3, 3] = dX[2]
    d[0, 0] = -(dX[0] + dX[1] + dX[2])
    return d


@njit(cache=True)
def rk4_reduced_frozen(r, h, eps, eta, M, R):
    k1 = reduced_rhs(r, eps, eta, M, R)
    k2 = reduced_rhs(r + 0.5 * h * k1, eps, eta, M, R)
    k3 = reduced_rhs(r + 0.5 * h * k2, eps, eta, M, R)
    k4 = reduced_rhs(r + h * k3, eps, eta, M, R)
    return r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def rk4_reduced(rho, t0, h, n, params, E0, tau, tc, Om, verbatim):
    """``n`` steps of the reduced route.

    Each step freezes the eigenframe at the step midpoint, moves the bare
    state into that frame, advances the reduced equations by one RK4 step and
    moves back, so frame rotation between steps is carried exactly.
    """
    for i in range(n):
        tm = t0 + (i + 0.5) * h
        H = hamiltonian(params, drive_amplitude(tm, E0, tau, tc, Om))
        eps, U = frame(H)
        xi = rates(eps, U, params)
        eta, M, R = reduced_coefficients(xi, verbatim)
        Ud = np.conj(U.T)
        r = rk4_reduced_frozen(Ud @ rho @ U, h, eps, eta, M, R)
        rho = _renormalise(U @ r @ Ud)
    return rho
