"""Entanglement transfer through the defect chain.

The transfer amplitude splits into a discrete part carried by the bound
states and a band part carried by the distorted spin waves

    f_{s->r}(t) = sum_loc exp(-i E_loc t) b_r b_s
                + \\int_{-pi}^{pi} dtheta exp(-i E t) g_r(theta) g_s(theta)^*,

with ``E = omega0 - cos(theta)`` and
``g_n = <n| (1 + G0+ T+) |plane wave>``.  The theta integral is done on a
uniform midpoint grid, which never touches the band edges.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NumericalWarning, ProtocolError, SingularityError, NumericalFailure
from .green import band_green, band_tmatrix, find_bound_states, BoundState
from .lattice import DefectConfig, TransferRecord, horizon_margin

DEFAULT_NODES = 4096
DRIFT_TOL = 1e-4
_TIME_CHUNK = 256


@dataclass
class BandAmplitude:
    """Distorted spin wave at ``E = omega0 - cos(theta)`` on a block of sites."""

    theta: float
    energy: float
    sites: np.ndarray
    g: np.ndarray


def quadrature_nodes(n_nodes: int) -> tuple[np.ndarray, float]:
    """Midpoint grid on ``(-pi, pi)`` and its uniform weight."""
    if n_nodes < 2 or n_nodes % 2:
        raise ValueError("the theta grid needs an even number of nodes")
    h = 2 * np.pi / n_nodes
    return -np.pi + (np.arange(n_nodes) + 0.5) * h, h


def band_matrix(defects: DefectConfig | None, thetas, sites) -> np.ndarray:
    """``g_n(theta)`` for every node (rows) and site (columns)."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    sites = np.atleast_1d(np.asarray(sites))
    plane = np.exp(1j * np.outer(thetas, sites))
    if defects is None or (defects.alpha1 == 0 and defects.alpha2 == 0):
        return plane / np.sqrt(2 * np.pi)
    tm = band_tmatrix(defects, thetas)
    incoming = np.exp(1j * np.outer(thetas, defects.sites))
    coef = np.einsum("mij,mj->mi", tm, incoming)
    g = plane.copy()
    for i, l in enumerate(defects.sites):
        g += band_green(sites[None, :] - l, thetas[:, None]) * coef[:, i:i + 1]
    return g / np.sqrt(2 * np.pi)


def band_amplitude(defects: DefectConfig | None, theta: float, window, omega0: float = 2.0) -> BandAmplitude:
    """Scattering state of the single-particle Hamiltonian at band parameter ``theta``."""
    if abs(np.sin(theta)) < 1e-12:
        raise SingularityError(f"theta={theta} is a band edge")
    sites = np.asarray(list(window))
    g = band_matrix(defects, [theta], sites)[0]
    return BandAmplitude(float(theta), float(omega0 - np.cos(theta)), sites, g)


def scattering_coefficients(defects: DefectConfig, theta: float) -> tuple[complex, complex]:
    """Reflection and transmission amplitudes for a wave incoming from the left.

    ``theta`` must lie in ``(0, pi)`` (positive group velocity).
    """
    if not 0 < theta < np.pi:
        raise ValueError("theta must lie in (0, pi)")
    tm = band_tmatrix(defects, np.array([theta]))[0]
    ls = np.asarray(defects.sites)
    pref = -1j / np.sin(theta)
    out_phase = np.exp(-1j * ls * theta)
    in_phase = np.exp(1j * ls * theta)
    transmission = 1 + pref * out_phase @ tm @ in_phase
    reflection = pref * in_phase @ tm @ in_phase
    return complex(reflection), complex(transmission)


def _bound_part(states: Sequence[BoundState], sender: int, sites, times) -> np.ndarray:
    out = np.zeros((len(times), len(sites)), dtype=complex)
    for st in states:
        weights = st.amplitude(np.asarray(sites)) * st.amplitude(sender)
        out += np.exp(-1j * st.x_loc * times)[:, None] * weights[None, :]
    return out


def analytic_amplitudes(defects: DefectConfig | None, sender: int, sites, times,
                        quad_nodes: int = DEFAULT_NODES, omega0: float = 2.0) -> np.ndarray:
    """``f_{s->n}(t)`` on the infinite chain, shape ``(len(times), len(sites))``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sites = np.atleast_1d(np.asarray(sites))
    states = find_bound_states(defects) if defects is not None else []
    thetas, w = quadrature_nodes(quad_nodes)
    g = band_matrix(defects, thetas, sites)
    g_s = band_matrix(defects, thetas, [sender])[:, 0]
    kernel = w * g * np.conj(g_s)[:, None]
    x = -np.cos(thetas)
    f = _bound_part(states, sender, sites, times)
    for start in range(0, len(times), _TIME_CHUNK):
        chunk = slice(start, start + _TIME_CHUNK)
        f[chunk] += np.exp(-1j * np.outer(times[chunk], x)) @ kernel
    return f * np.exp(-1j * omega0 * times)[:, None]


def transfer_amplitude(defects: DefectConfig | None, sender: int, receiver: int, times,
                       quad_nodes: int = DEFAULT_NODES, omega0: float = 2.0,
                       self_check: bool = True) -> TransferRecord:
    """Transfer amplitude from bound states plus band quadrature.

    With ``self_check`` the quadrature is repeated on twice as many nodes;
    a change in ``|f|`` above 1e-4 raises a :class:`NumericalWarning` and
    leaves the drift on the record.  At least 512 nodes are advisable.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    f = analytic_amplitudes(defects, sender, [receiver], times, quad_nodes, omega0)[:, 0]
    drift = None
    if self_check:
        f2 = analytic_amplitudes(defects, sender, [receiver], times, 2 * quad_nodes, omega0)[:, 0]
        drift = float(np.max(np.abs(np.abs(f) - np.abs(f2))))
        if drift > DRIFT_TOL:
            warnings.warn(f"quadrature with {quad_nodes} nodes drifts by {drift:.2e} on doubling",
                          NumericalWarning, stacklevel=2)
    return TransferRecord(sender, receiver, times, f, np.abs(f), "analytic",
                          quad_nodes=quad_nodes, quad_drift=drift)


def completeness(defects: DefectConfig | None, site: int, quad_nodes: int = DEFAULT_NODES) -> float:
    """``sum_loc |b_s|^2 + int dtheta |g_s|^2``, equal to 1 for a complete basis."""
    thetas, w = quadrature_nodes(quad_nodes)
    band = w * np.sum(np.abs(band_matrix(defects, thetas, [site])[:, 0]) ** 2)
    states = find_bound_states(defects) if defects is not None else []
    return float(band + sum(st.amplitude(site) ** 2 for st in states))


def resolved_nodes(defects: DefectConfig | None, sites, start: int = DEFAULT_NODES,
                   tol: float = 1e-10, max_nodes: int = 1 << 18) -> int:
    """Smallest ``start * 2**k`` whose completeness sums stop changing on doubling.

    Strong defects far apart trap quasi-bound band resonances whose narrow
    peaks in ``theta`` need more nodes than the default.
    """
    sites = list(sites)
    n = start
    prev = [completeness(defects, s, n) for s in sites]
    while n < max_nodes:
        cur = [completeness(defects, s, 2 * n) for s in sites]
        if max(abs(a - b) for a, b in zip(prev, cur)) <= tol:
            return n
        n, prev = 2 * n, cur
    raise NumericalFailure(f"completeness not converged at {max_nodes} nodes")


def entanglement_map(defects: DefectConfig | None, sender: int, times, window,
                     quad_nodes: int = DEFAULT_NODES, omega0: float = 2.0):
    """``C_n(t)`` for every site of ``window``; returns ``(sites, matrix[t, n])``."""
    sites = np.asarray(list(window))
    f = analytic_amplitudes(defects, sender, sites, times, quad_nodes, omega0)
    return sites, np.abs(f)


def analytic_window(defects: DefectConfig, sender: int, t_max: float) -> np.ndarray:
    """Sites reachable from ``sender`` by ``t_max`` plus five localization lengths.

    The reach includes the precursor running ahead of the speed-1 front,
    whose width grows like ``t**(1/3)``.
    """
    states = find_bound_states(defects)
    loc = max((1.0 / st.xi for st in states), default=0.0)
    width = int(np.ceil(max(5 * loc, t_max + horizon_margin(t_max))))
    lo = min(sender, *defects.sites) - width
    hi = max(sender, *defects.sites) + width
    return np.arange(lo, hi + 1)


# --------------------------------------------------------------------------
# Rabi oscillations between the two localized states


@dataclass
class RabiReport:
    omega_r: float
    period: float
    times: np.ndarray = field(repr=False)
    c_l1: np.ndarray = field(repr=False)
    c_l2: np.ndarray = field(repr=False)
    predicted_l1: np.ndarray = field(repr=False)
    predicted_l2: np.ndarray = field(repr=False)

    @property
    def expected_period(self) -> float:
        return 2 * np.pi / self.omega_r

    @property
    def max_exchange(self) -> float:
        return float(self.c_l2.max())


def measure_period(times: np.ndarray, signal: np.ndarray, hysteresis: float = 0.2) -> float:
    """Period from upward crossings of the signal mean.

    A crossing counts only once the signal has dipped below ``mean - h`` and
    then risen above ``mean + h``, with ``h`` a fraction of the half range;
    this keeps band ripples from registering as extra crossings.
    """
    y = signal - signal.mean()
    h = hysteresis * 0.5 * np.ptp(y)
    ups = []
    armed = False
    for k in range(1, len(y)):
        if y[k] < -h:
            armed = True
        elif armed and y[k] > h:
            # first sample above +h; interpolate the mean crossing before it
            j = k
            while j > 0 and y[j - 1] > 0:
                j -= 1
            t0, t1, y0, y1 = times[j - 1], times[j], y[j - 1], y[j]
            ups.append(t0 - y0 * (t1 - t0) / (y1 - y0))
            armed = False
    if len(ups) < 2:
        raise NumericalFailure("time grid too short to measure a period")
    return float((ups[-1] - ups[0]) / (len(ups) - 1))


def rabi_analysis(defects: DefectConfig, times, quad_nodes: int = DEFAULT_NODES,
                  omega0: float = 2.0) -> RabiReport:
    """Rabi exchange for an excitation injected at ``l1``."""
    states = find_bound_states(defects, omega0)
    if len(states) < 2:
        raise ProtocolError("Rabi transfer unavailable: fewer than two bound states")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    omega_r = states[1].energy - states[0].energy
    f = analytic_amplitudes(defects, defects.l1, list(defects.sites), times, quad_nodes, omega0)
    c1, c2 = np.abs(f[:, 0]), np.abs(f[:, 1])
    return RabiReport(omega_r, measure_period(times, c1), times, c1, c2,
                      np.abs(np.cos(0.5 * omega_r * times)), np.abs(np.sin(0.5 * omega_r * times)))


# --------------------------------------------------------------------------
# Entanglement trapping between next-nearest-neighbour defects


@dataclass
class TrapReport:
    times: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)
    demodulated: np.ndarray = field(repr=False)
    residual: float = 0.0
    parabola_coeff: float = 0.0
    parabola_offset: float = 0.0
    fit_residual: float = 0.0
    bound_weight: float = 0.0


def trap_metrics(record: TransferRecord, state: BoundState, fit_fraction: float = 0.1,
                 tail_fraction: float = 0.2) -> TrapReport:
    """Envelope, short-time curvature and residual of the trapped concurrence.

    The fast oscillation is the beat between the bound-state term
    ``b_s b_r exp(-i E_loc t)`` and the band term.  Multiplying by
    ``exp(+i E_loc t)`` freezes the bound term, and the envelope
    ``|b_s b_r| + |band|`` is the curve traced by the oscillation maxima.
    """
    t = record.times
    demod = record.f * np.exp(1j * state.energy * t)
    bound = float(state.amplitude(record.sender) * state.amplitude(record.receiver))
    raw = abs(bound) + np.abs(demod - bound)
    envelope = np.maximum.accumulate(raw[::-1])[::-1]

    span = t[-1] - t[0]
    fit = t <= t[0] + fit_fraction * span
    if fit.sum() < 4:
        raise NumericalFailure("too few samples in the short-time window for a parabola fit")
    design = np.column_stack([np.ones(fit.sum()), (t[fit] - t[0]) ** 2])
    coef, *_ = np.linalg.lstsq(design, envelope[fit], rcond=None)
    resid = envelope[fit] - design @ coef
    spread = np.ptp(envelope[fit])
    fit_residual = float(np.sqrt(np.mean(resid**2)) / spread) if spread > 0 else 0.0
    if not np.all(np.isfinite(coef)):
        raise NumericalFailure(f"parabola fit failed, residual diagnostics {resid!r}")
    tail = t >= t[-1] - tail_fraction * span
    return TrapReport(t, envelope, demod, float(np.mean(record.concurrence[tail])),
                      float(coef[1]), float(coef[0]), fit_residual, abs(bound))


# --------------------------------------------------------------------------
# Splitting of the two localized levels versus defect distance


@dataclass
class GapFit:
    slope: float
    intercept: float
    r2: float
    distances: np.ndarray
    gaps: np.ndarray
    excluded: list[int]


def gap_scaling(alpha: float, d_range, omega0: float = 2.0) -> GapFit:
    """Linear fit of ``ln E21`` against the defect distance at ``alpha1 = alpha2``."""
    ds, gaps, excluded = [], [], []
    for d in d_range:
        states = find_bound_states(DefectConfig(0, int(d), alpha, alpha), omega0)
        if len(states) < 2:
            excluded.append(int(d))
            warnings.warn(f"d={d}: fewer than two bound states, excluded from the fit",
                          NumericalWarning, stacklevel=2)
            continue
        ds.append(int(d))
        gaps.append(states[1].energy - states[0].energy)
    ds, gaps = np.array(ds), np.array(gaps)
    if len(ds) < 2:
        raise NumericalFailure("need at least two distances with two bound states")
    y = np.log(gaps)
    slope, intercept = np.polyfit(ds, y, 1)
    pred = slope * ds + intercept
    r2 = 1 - np.sum((y - pred) ** 2) / np.sum((y - y.mean()) ** 2)
    return GapFit(float(slope), float(intercept), float(r2), ds, gaps, excluded)
