"""Exact finite-chain machinery in the single-excitation sector.

The XX chain with one flipped spin reduces to a tight-binding particle on
``n_sites`` sites.  With the band convention ``E = omega0 - cos(theta)`` the
hopping amplitude is ``-1/2`` and a defect of strength ``alpha`` adds the
on-site energy ``-alpha/2``.  Everything in this module is brute force
(dense diagonalization, spectral propagation) and serves as the reference
against which the closed-form Green-function results are checked.

Sites are labelled symmetrically, ``-(N-1)/2 ... (N-1)/2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

HOPPING = -0.5
BOUNDARIES = ("ring", "open")


@dataclass(frozen=True)
class ChainSpec:
    """Global chain parameters.

    Parameters
    ----------
    omega0 : float
        Qubit level spacing in units of the coupling; must exceed 1 so that
        the fully polarized state is the unperturbed ground state.
    n_sites : int
        Odd number of sites of the finite oracle chain.
    boundary : {"ring", "open"}
        Closed (periodic) or open chain.
    """

    omega0: float = 2.0
    n_sites: int = 501
    boundary: str = "ring"

    def __post_init__(self):
        if self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ConfigurationError(f"n_sites must be odd and >= 3, got {self.n_sites}")
        if not self.omega0 > 1:
            raise ConfigurationError(f"omega0 must exceed 1, got {self.omega0}")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    @property
    def half(self) -> int:
        return (self.n_sites - 1) // 2

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)

    def contains(self, site: int) -> bool:
        return -self.half <= site <= self.half

    def index(self, site: int) -> int:
        if not self.contains(site):
            raise ConfigurationError(f"site {site} outside chain [{-self.half}, {self.half}]")
        return int(site) + self.half


@dataclass(frozen=True)
class DefectConfig:
    """Two field defects at sites ``l1`` and ``l2`` with strengths ``alpha1``, ``alpha2``."""

    l1: int
    l2: int
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if self.l1 == self.l2:
            raise ConfigurationError("defect sites must differ")

    @property
    def d(self) -> int:
        return abs(self.l2 - self.l1)

    @property
    def sites(self) -> tuple[int, int]:
        return (self.l1, self.l2)

    @property
    def alphas(self) -> tuple[float, float]:
        return (self.alpha1, self.alpha2)

    @property
    def potentials(self) -> tuple[float, float]:
        """On-site energy shifts ``-alpha_i/2`` of the single-particle problem."""
        return (-0.5 * self.alpha1, -0.5 * self.alpha2)

    def swapped(self) -> DefectConfig:
        return DefectConfig(self.l2, self.l1, self.alpha2, self.alpha1)

    def with_alphas(self, alpha1: float, alpha2: float) -> DefectConfig:
        return DefectConfig(self.l1, self.l2, alpha1, alpha2)


@dataclass
class SingleExcitationState:
    """Amplitudes ``b_n`` of ``sum_n b_n |n>`` on a contiguous block of sites.

    ``first_site`` is the label of ``amplitudes[0]``.
    """

    amplitudes: np.ndarray
    first_site: int = 0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @classmethod
    def localized(cls, spec: ChainSpec, site: int) -> SingleExcitationState:
        amps = np.zeros(spec.n_sites, dtype=complex)
        amps[spec.index(site)] = 1.0
        return cls(amps, -spec.half)

    @classmethod
    def on_chain(cls, spec: ChainSpec, amplitudes) -> SingleExcitationState:
        return cls(amplitudes, -spec.half)

    @property
    def sites(self) -> np.ndarray:
        return self.first_site + np.arange(len(self.amplitudes))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, site: int) -> complex:
        k = site - self.first_site
        if 0 <= k < len(self.amplitudes):
            return complex(self.amplitudes[k])
        return 0j


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition ``H = offset + V diag(energies) V^T``.

    Keeping the uniform diagonal shift ``offset`` out of the eigensolver makes
    concurrences exactly independent of ``omega0``.
    """

    energies: np.ndarray
    vectors: np.ndarray
    offset: float = 0.0

    @property
    def absolute_energies(self) -> np.ndarray:
        return self.energies + self.offset


@dataclass
class TransferRecord:
    """Time series of the transfer amplitude ``f_{s->r}(t)`` and ``C_r(t) = |f|``."""

    sender: int
    receiver: int
    times: np.ndarray
    f: np.ndarray
    concurrence: np.ndarray
    method: str
    horizon_ok: bool = True
    n_sites: int | None = None
    quad_nodes: int | None = None
    quad_drift: float | None = None

    @property
    def converged(self) -> bool:
        return self.quad_drift is None or self.quad_drift <= 1e-4


def coupling_matrix(spec: ChainSpec, defects: DefectConfig | None = None) -> np.ndarray:
    """Single-particle Hamiltonian without the uniform ``omega0`` diagonal."""
    n = spec.n_sites
    k = np.zeros((n, n))
    idx = np.arange(n - 1)
    k[idx, idx + 1] = HOPPING
    k[idx + 1, idx] = HOPPING
    if spec.boundary == "ring":
        k[0, n - 1] = k[n - 1, 0] = HOPPING
    if defects is not None:
        for site, v in zip(defects.sites, defects.potentials):
            k[spec.index(site), spec.index(site)] += v
    return k


def build_hamiltonian(spec: ChainSpec, defects: DefectConfig | None = None) -> np.ndarray:
    """Single-excitation Hamiltonian, energies measured from the polarized state.

    Diagonal ``omega0`` (plus ``-alpha_i/2`` at the defect sites), hopping
    ``-1/2`` between neighbours and across the seam for a ring.
    """
    return spec.omega0 * np.eye(spec.n_sites) + coupling_matrix(spec, defects)


def diagonalize(h: np.ndarray, offset: float = 0.0) -> Spectrum:
    """Dense symmetric eigen-decomposition, eigenvalues ascending."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or not np.array_equal(h, h.T):
        raise ValueError("diagonalize requires a real symmetric matrix")
    energies, vectors = np.linalg.eigh(h)
    return Spectrum(energies, vectors, float(offset))


def chain_spectrum(spec: ChainSpec, defects: DefectConfig | None = None) -> Spectrum:
    """Spectrum of the full Hamiltonian with ``omega0`` carried as an exact offset."""
    return diagonalize(coupling_matrix(spec, defects), offset=spec.omega0)


def propagate(spectrum: Spectrum, initial: SingleExcitationState | np.ndarray, times) -> np.ndarray:
    """Apply ``exp(-iHt)`` for every ``t`` in ``times``.

    Returns an array of shape ``(len(times), n_sites)``; row ``k`` holds the
    amplitudes of the state at ``times[k]``.
    """
    psi0 = initial.amplitudes if isinstance(initial, SingleExcitationState) else np.asarray(initial, complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    coeff = spectrum.vectors.T @ psi0
    phases = np.exp(-1j * np.outer(times, spectrum.energies))
    out = (phases * coeff) @ spectrum.vectors.T
    if spectrum.offset:
        out *= np.exp(-1j * spectrum.offset * times)[:, None]
    # exp(0) is exact, but the basis round trip is not
    out[times == 0] = psi0
    return out


def concurrence_pair(state: SingleExcitationState, i: int, j: int) -> float:
    """Concurrence ``2|b_i b_j|`` between spins ``i`` and ``j``."""
    if i == j:
        raise ValueError("concurrence needs two distinct sites")
    return 2.0 * abs(state.amplitude(i) * state.amplitude(j))


def horizon_time(spec: ChainSpec, active_sites: Sequence[int]) -> float:
    """Time before which the boundary cannot influence the active region (speed 1)."""
    lo, hi = min(active_sites), max(active_sites)
    if spec.boundary == "ring":
        return float(spec.n_sites - (hi - lo))
    return float(2 * min(lo + spec.half, spec.half - hi) + 1)


def horizon_margin(horizon: float) -> float:
    """Precursor allowance ahead of a speed-1 front (the front edge widens as t**(1/3))."""
    return 5.0 + 3.0 * max(horizon, 1.0) ** (1.0 / 3.0)


def oracle_amplitudes(spec: ChainSpec, defects: DefectConfig | None, sender: int, times) -> np.ndarray:
    """``f_{s->n}(t)`` for every site ``n`` of the chain, shape ``(len(times), n_sites)``."""
    spectrum = chain_spectrum(spec, defects)
    return propagate(spectrum, SingleExcitationState.localized(spec, sender), times)


def transfer_concurrence_oracle(spec: ChainSpec, defects: DefectConfig | None,
                                sender: int, receiver: int, times) -> TransferRecord:
    """Exact ``C_r(t) = |<r| exp(-iHt) |s>|`` on the finite chain."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    r = spec.index(receiver)
    f = oracle_amplitudes(spec, defects, sender, times)[:, r]
    active = [sender, receiver] + (list(defects.sites) if defects is not None else [])
    horizon = horizon_time(spec, active)
    ok = bool(times.max(initial=0.0) <= horizon - horizon_margin(horizon))
    return TransferRecord(sender, receiver, times, f, np.abs(f), "oracle",
                          horizon_ok=ok, n_sites=spec.n_sites)


def oracle_size(active_sites: Sequence[int], t_max: float) -> int:
    """Smallest odd ring length whose horizon covers ``t_max`` for the given sites."""
    lo, hi = min(active_sites), max(active_sites)
    n = max(2 * max(abs(lo), abs(hi)) + 1, int(np.ceil(t_max)) + (hi - lo))
    n += 1 - n % 2
    while n - (hi - lo) - horizon_margin(n - (hi - lo)) < t_max:
        n += 2
    return n
