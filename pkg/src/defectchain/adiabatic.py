"""Adiabatic passage of the localized excitation from one defect to the other.

The defect fields are swept so that the ground state, initially bound to
``l1`` by a strong ``alpha1``, ends bound to ``l2``.  Both strengths pass
through a common small value at mid-sweep, where the level splitting is
smallest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConfigurationError, NumericalFailure
from .green import find_bound_states
from .lattice import ChainSpec, DefectConfig, HOPPING, SingleExcitationState, coupling_matrix

SHAPES = ("linear", "smoothstep")

# commutator-free fourth-order Magnus: two exponentials per step built from
# the Hamiltonian at the two Gauss-Legendre nodes
_GAUSS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)
_A1 = (3 - 2 * np.sqrt(3)) / 12
_A2 = (3 + 2 * np.sqrt(3)) / 12


@dataclass(frozen=True)
class Schedule:
    """Defect strengths for the passage ``l1 -> l2``.

    ``alpha1`` falls from ``alpha_max`` to ``alpha_min`` passing through
    ``crossing_alpha`` at ``duration/2``.  ``log(alpha1)`` is the quadratic in
    the shaped progress variable through the three anchor values, and
    ``alpha2(t) = alpha1(duration - t)``.
    """

    duration: float
    alpha_max: float = 5.0
    alpha_min: float = 0.05
    crossing_alpha: float = 0.3
    shape: str = "smoothstep"
    sites: tuple[int, int] = (-2, 2)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigurationError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if not self.alpha_max > self.crossing_alpha > self.alpha_min > 0:
            raise ConfigurationError("need alpha_max > crossing_alpha > alpha_min > 0")
        if not self.duration > 0:
            raise ConfigurationError("duration must be positive")
        if self.sites[0] == self.sites[1]:
            raise ConfigurationError("defect sites must differ")

    @property
    def crossing_time(self) -> float:
        return 0.5 * self.duration

    def _progress(self, t):
        tau = np.clip(np.asarray(t, dtype=float) / self.duration, 0.0, 1.0)
        if self.shape == "linear":
            return tau, np.full_like(tau, 1.0 / self.duration)
        return tau * tau * (3 - 2 * tau), 6 * tau * (1 - tau) / self.duration

    def _descending(self, t):
        s, ds = self._progress(t)
        hi, mid, lo = np.log([self.alpha_max, self.crossing_alpha, self.alpha_min])
        # log(alpha) quadratic in s through (0, hi), (1/2, mid), (1, lo)
        c2 = 2 * (hi + lo - 2 * mid)
        c1 = lo - hi - c2
        a = np.exp(hi + c1 * s + c2 * s * s)
        return a, a * (c1 + 2 * c2 * s) * ds

    def alphas(self, t):
        a1, _ = self._descending(t)
        a2, _ = self._descending(self.duration - np.asarray(t, dtype=float))
        return a1, a2

    def rates(self, t):
        """Time derivatives of ``(alpha1, alpha2)``."""
        _, r1 = self._descending(t)
        _, r2 = self._descending(self.duration - np.asarray(t, dtype=float))
        return r1, -r2

    def defects(self, t) -> DefectConfig:
        a1, a2 = self.alphas(t)
        return DefectConfig(self.sites[0], self.sites[1], float(a1), float(a2))

    def compressed(self, factor: float) -> Schedule:
        return Schedule(self.duration / factor, self.alpha_max, self.alpha_min,
                        self.crossing_alpha, self.shape, self.sites)

    def reversed(self) -> Schedule:
        """The same sweep run backwards (``l2 -> l1``)."""
        return Schedule(self.duration, self.alpha_max, self.alpha_min,
                        self.crossing_alpha, self.shape, (self.sites[1], self.sites[0]))


@dataclass(frozen=True)
class ConstantSchedule:
    """Frozen defect fields, for consistency checks and post-sweep evolution."""

    duration: float
    alpha1: float
    alpha2: float
    sites: tuple[int, int] = (-2, 2)

    def alphas(self, t):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, self.alpha1), np.full_like(t, self.alpha2)

    def rates(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t), np.zeros_like(t)

    def defects(self, t) -> DefectConfig:
        return DefectConfig(self.sites[0], self.sites[1], self.alpha1, self.alpha2)


def make_schedule(shape: str = "smoothstep", alpha_max: float = 5.0, alpha_min: float = 0.05,
                  duration: float = 100.0, crossing_alpha: float = 0.3,
                  sites: tuple[int, int] = (-2, 2)) -> Schedule:
    return Schedule(duration, alpha_max, alpha_min, crossing_alpha, shape, tuple(sites))


@dataclass(frozen=True)
class GapInfo:
    """Instantaneous gap above the lowest level.

    ``kind`` is ``"bound"`` for the splitting of two localized levels,
    ``"band-edge"`` for the distance of a single level to the band bottom
    and ``"none"`` without any localized level.
    """

    value: float
    kind: str


def instantaneous_gap(defects: DefectConfig, omega0: float = 2.0) -> GapInfo:
    states = [s for s in find_bound_states(defects, omega0) if s.x_loc < -1]
    if len(states) >= 2:
        return GapInfo(states[1].energy - states[0].energy, "bound")
    if len(states) == 1:
        return GapInfo(omega0 - 1.0 - states[0].energy, "band-edge")
    return GapInfo(0.0, "none")


class _ChainModel:
    """Instantaneous eigenproblems of the sweep chain (omega0 dropped)."""

    def __init__(self, spec: ChainSpec, sites):
        self.spec = spec
        self.idx = (spec.index(sites[0]), spec.index(sites[1]))
        self.tridiagonal = spec.boundary == "open"
        self.off = np.full(spec.n_sites - 1, HOPPING)
        self.base = coupling_matrix(spec)

    def diagonal(self, a1, a2):
        diag = np.zeros(self.spec.n_sites)
        diag[self.idx[0]] += -0.5 * a1
        diag[self.idx[1]] += -0.5 * a2
        return diag

    def eigh(self, diag, select=None):
        if self.tridiagonal:
            if select is None:
                return eigh_tridiagonal(diag, self.off)
            return eigh_tridiagonal(diag, self.off, select="i", select_range=select)
        e, v = np.linalg.eigh(self.base + np.diag(diag))
        if select is not None:
            e, v = e[select[0]:select[1] + 1], v[:, select[0]:select[1] + 1]
        return e, v

    def ground_state(self, a1, a2) -> np.ndarray:
        _, v = self.eigh(self.diagonal(a1, a2), select=(0, 0))
        return v[:, 0]

    def lowest_two(self, a1, a2):
        return self.eigh(self.diagonal(a1, a2), select=(0, 1))

    def step(self, psi, schedule, t, h):
        """One commutator-free Magnus step of length ``h``."""
        da1, da2 = schedule.alphas(t + _GAUSS[0] * h)
        db1, db2 = schedule.alphas(t + _GAUSS[1] * h)
        d_first = self.diagonal(da1, da2)
        d_second = self.diagonal(db1, db2)
        for diag in (_A2 * d_first + _A1 * d_second, _A1 * d_first + _A2 * d_second):
            # each exponential carries half of the hopping term
            e, v = self.eigh(2 * diag)
            psi = v @ (np.exp(-0.5j * h * e) * (v.T @ psi))
        return psi


@dataclass
class SweepResult:
    """Outcome of a time-dependent sweep.

    ``fidelity`` is the overlap with the instantaneous ground state at the
    end of the sweep; ``site_population`` is ``|<l2|psi(T)>|^2``.
    """

    times: np.ndarray = field(repr=False)
    trajectory: np.ndarray = field(repr=False)
    final_state: np.ndarray = field(repr=False)
    fidelity: float = 0.0
    site_population: float = 0.0
    norm_drift: float = 0.0
    dt: float = 0.0
    dt_check_delta: float | None = None
    max_adiabatic_param: float | None = None
    min_gap: float | None = None


def _integrate(model: _ChainModel, schedule, psi0: np.ndarray, dt: float, n_samples: int):
    n_steps = max(1, int(np.ceil(schedule.duration / dt)))
    h = schedule.duration / n_steps
    stride = max(1, n_steps // max(1, n_samples - 1))
    psi = psi0.astype(complex)
    times, traj = [0.0], [psi.copy()]
    for k in range(n_steps):
        psi = model.step(psi, schedule, k * h, h)
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            times.append((k + 1) * h)
            traj.append(psi.copy())
    return psi, np.array(times), np.array(traj)


def propagate_time_dependent(spec: ChainSpec, schedule, initial=None, dt: float = 0.5,
                             n_samples: int = 201, self_check: bool = True,
                             tolerance: float = 1e-6, metric_samples: int | None = 200) -> SweepResult:
    """Integrate the single-excitation Schroedinger equation along ``schedule``.

    ``initial`` defaults to the instantaneous ground state at ``t = 0``.  With
    ``self_check`` the sweep is repeated at ``dt/2`` and a fidelity change
    above ``tolerance`` raises :class:`NumericalFailure`.
    """
    model = _ChainModel(spec, schedule.sites)
    if initial is None:
        psi0 = model.ground_state(*schedule.alphas(0.0))
    elif isinstance(initial, SingleExcitationState):
        psi0 = initial.amplitudes
    else:
        psi0 = np.asarray(initial, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ConfigurationError("initial state must be normalized")

    final_gs = model.ground_state(*schedule.alphas(schedule.duration))
    target = spec.index(schedule.sites[1])

    psi, times, traj = _integrate(model, schedule, psi0, dt, n_samples)
    fidelity = float(abs(np.vdot(final_gs, psi)) ** 2)
    delta = None
    if self_check:
        psi_half, _, _ = _integrate(model, schedule, psi0, 0.5 * dt, 2)
        delta = abs(fidelity - float(abs(np.vdot(final_gs, psi_half)) ** 2))
        if delta > tolerance:
            raise NumericalFailure(f"step-halving changed the fidelity by {delta:.2e}; "
                                   f"try dt={dt / 4:g}")
    # the omega0 diagonal only contributes a global phase
    phase = np.exp(-1j * spec.omega0 * times)
    norms = np.linalg.norm(traj, axis=1)
    result = SweepResult(times, traj * phase[:, None], psi * phase[-1], fidelity,
                         float(abs(psi[target]) ** 2), float(np.max(np.abs(norms - 1))),
                         schedule.duration / max(1, int(np.ceil(schedule.duration / dt))), delta)
    if metric_samples and isinstance(schedule, Schedule):
        metric = adiabaticity_metric(schedule, spec, metric_samples)
        result.max_adiabatic_param = metric.value
        result.min_gap = metric.min_gap
    return result


@dataclass
class AdiabaticityMetric:
    value: float
    min_gap: float
    times: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)


def adiabaticity_metric(schedule: Schedule, spec: ChainSpec, samples: int = 200) -> AdiabaticityMetric:
    """``max_t |<psi_2| dH/dt |psi_1>| / E21(t)**2`` over interior sample times.

    ``psi_1, psi_2`` are the two lowest eigenstates of the sweep chain; where
    only one level is localized the partner is the lowest band state.
    """
    model = _ChainModel(spec, schedule.sites)
    i1, i2 = model.idx
    ts = np.linspace(0, schedule.duration, samples + 2)[1:-1]
    a1, a2 = schedule.alphas(ts)
    r1, r2 = schedule.rates(ts)
    ratios, gaps = np.empty(len(ts)), np.empty(len(ts))
    for k in range(len(ts)):
        e, v = model.lowest_two(a1[k], a2[k])
        coupling = -0.5 * (r1[k] * v[i1, 0] * v[i1, 1] + r2[k] * v[i2, 0] * v[i2, 1])
        gaps[k] = e[1] - e[0]
        ratios[k] = abs(coupling) / gaps[k] ** 2
    return AdiabaticityMetric(float(ratios.max()), float(gaps.min()), ts, ratios, gaps)


@dataclass
class DecouplingReport:
    leakage: float
    times: np.ndarray = field(repr=False)
    population: np.ndarray = field(repr=False)


def decoupling_check(final_defects: DefectConfig, receiver: int | None = None,
                     spec: ChainSpec | None = None, duration: float = 200.0,
                     window: float = 50.0, samples: int = 2001) -> DecouplingReport:
    """Band leakage of an excitation parked at the receiver under frozen fields.

    Starting from ``|r>``, returns ``1 - max |<r|psi(t)>|^2`` over the final
    ``window`` of the evolution.
    """
    from .lattice import chain_spectrum, propagate

    receiver = final_defects.l2 if receiver is None else receiver
    if spec is None:
        spec = ChainSpec(2.0, 2 * int(duration + window) + 2 * max(map(abs, final_defects.sites)) + 1)
    times = np.linspace(0, duration, samples)
    traj = propagate(chain_spectrum(spec, final_defects),
                     SingleExcitationState.localized(spec, receiver), times)
    pop = np.abs(traj[:, spec.index(receiver)]) ** 2
    tail = times >= duration - window
    return DecouplingReport(float(1 - pop[tail].max()), times, pop)
