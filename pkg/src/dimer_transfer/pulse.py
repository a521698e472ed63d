"""Gaussian pulse trains driving the donor pigment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SQRT_2PI = math.sqrt(2 * math.pi)

# the drive is treated as exactly zero farther than this many widths from every center
DRIVE_SUPPORT = 8.0
# a segment is considered "rising" within this many widths of its center
LEAD_IN = 5.0
# step cap near a center, in units of tau_p
STEPS_PER_WIDTH = 10


@dataclass(frozen=True)
class GaussianSegment:
    """One pulse ``E0/(sqrt(2 pi) tau_p) exp(-(t-tc)^2/(2 tau_p^2)) exp(i Omega (t-tc))``.

    ``tau_p`` is the width parameter exactly as it appears in the envelope; it
    is not converted from a FWHM.
    """

    E0: float = 1.0
    tau_p: float = 1.0
    t_center: float = 0.0
    Omega: float = 0.0

    def __post_init__(self):
        if not self.tau_p > 0:
            raise ValueError("tau_p must be positive")
        if self.E0 < 0:
            raise ValueError("E0 must be non-negative")

    @property
    def peak(self) -> float:
        return self.E0 / (SQRT_2PI * self.tau_p)

    def envelope(self, t):
        x = (np.asarray(t, dtype=float) - self.t_center) / self.tau_p
        return self.peak * np.exp(-0.5 * x * x)

    def __call__(self, t):
        dt = np.asarray(t, dtype=float) - self.t_center
        return self.envelope(t) * np.exp(1j * self.Omega * dt)

    def total_energy(self) -> float:
        """Analytic integral of ``|E(t)|^2`` over the whole real line."""
        return self.E0**2 / (2 * math.sqrt(math.pi) * self.tau_p)


@dataclass(frozen=True)
class PulseTrain:
    segments: tuple[GaussianSegment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __call__(self, t):
        return amplitude(self, t)

    @property
    def start_time(self) -> float:
        """Default simulation start: ``LEAD_IN`` widths before the earliest pulse."""
        if not self.segments:
            return 0.0
        return min(s.t_center - LEAD_IN * s.tau_p for s in self.segments)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        segs = self.segments
        return (
            np.array([s.E0 for s in segs], dtype=float),
            np.array([s.tau_p for s in segs], dtype=float),
            np.array([s.t_center for s in segs], dtype=float),
            np.array([s.Omega for s in segs], dtype=float),
        )


def amplitude(train: PulseTrain, t):
    """Complex drive amplitude E(t); scalar in, scalar out."""
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape, dtype=complex)
    for seg in train.segments:
        out = out + seg(t_arr)
    return complex(out) if out.ndim == 0 else out


def _interval_step(train: PulseTrain, a: float, b: float, dt: float) -> float | None:
    """Largest allowed step on [a, b], or None if the drive vanishes there."""
    h = None
    for seg in train.segments:
        c, w = seg.t_center, seg.tau_p
        if b > c - DRIVE_SUPPORT * w and a < c + DRIVE_SUPPORT * w and seg.E0 > 0:
            h = dt if h is None else h
            if b > c - LEAD_IN * w and a < c + LEAD_IN * w:
                h = min(h, w / STEPS_PER_WIDTH)
    return h


@dataclass(frozen=True)
class IntegrationPlan:
    """Output sample times plus the RK4 substep count on each interval.

    ``substeps[k] == 0`` marks a drive-free interval, which the integrator may
    propagate exactly.
    """

    times: np.ndarray
    substeps: np.ndarray

    def interval_grid(self, k: int) -> np.ndarray:
        n = max(int(self.substeps[k]), 1)
        return np.linspace(self.times[k], self.times[k + 1], n + 1)


def sample_times(t_start: float, t_end: float, sample_interval: float) -> np.ndarray:
    if t_end < t_start:
        raise ValueError("t_end precedes t_start")
    n = int(math.floor((t_end - t_start) / sample_interval + 1e-9))
    times = t_start + sample_interval * np.arange(n + 1)
    if t_end - times[-1] > 1e-9 * max(1.0, abs(t_end)):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end if n > 0 else times[-1]
    return times


def integration_plan(train: PulseTrain, t_start: float, t_end: float, dt: float = 1e-3,
                     sample_interval: float = 0.05, exact_free: bool = True) -> IntegrationPlan:
    """Time grid shared by the integrator and the pulse-energy quadrature.

    Each interval between output samples is split into equal RK4 substeps no
    longer than ``dt``, and no longer than ``tau_p/10`` within five widths of
    any pulse center.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    times = sample_times(t_start, t_end, sample_interval)
    substeps = np.zeros(len(times) - 1, dtype=np.int64)
    for k in range(len(times) - 1):
        a, b = times[k], times[k + 1]
        h = _interval_step(train, a, b, dt)
        if h is None:
            if exact_free:
                continue
            h = dt
        substeps[k] = max(1, math.ceil((b - a) / h - 1e-9))
    return IntegrationPlan(times=times, substeps=substeps)


def cumulative_energy(train: PulseTrain, plan: IntegrationPlan) -> np.ndarray:
    """Trapezoidal ``int |E|^2 dt`` from the first sample to every sample."""
    out = np.zeros(len(plan.times))
    if not train.segments:
        return out
    acc = 0.0
    for k in range(len(plan.times) - 1):
        grid = plan.interval_grid(k)
        e2 = np.abs(amplitude(train, grid)) ** 2
        acc += float(np.sum(0.5 * (e2[1:] + e2[:-1]) * np.diff(grid)))
        out[k + 1] = acc
    return out


def energy_integral(train: PulseTrain, t: float, t_start: float | None = None,
                    dt: float = 1e-3, sample_interval: float = 0.05) -> float:
    """Pulse energy delivered between ``t_start`` (default: the train's start) and ``t``."""
    if not train.segments:
        return 0.0
    t0 = train.start_time if t_start is None else t_start
    if t <= t0:
        return 0.0
    plan = integration_plan(train, t0, t, dt, sample_interval)
    return float(cumulative_energy(train, plan)[-1])
