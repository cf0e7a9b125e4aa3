"""Infinite-chain Green function, two-defect T-matrix and bound states.

Energies are reduced, ``x = E - omega0``, so the band is ``-1 < x < 1``.  The
free propagator between sites a distance ``delta`` apart is

    G0(delta, x) = (1/2pi) \\int dtheta exp(i theta delta) / (x + cos theta),

which off the band decays as ``lam**delta`` with ``|lam| < 1`` a root of
``lam**2 + 2 x lam + 1 = 0``.  Writing ``x = -cosh(xi)`` below the band gives
``lam = exp(-xi)``, so ``xi`` is directly the inverse localization length.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.optimize import brentq

from .errors import NumericalFailure, SingularityError
from .lattice import DefectConfig

BELOW = "below-band"
IN_BAND = "in-band"
ABOVE = "above-band"

WINDOW_TAIL = 1e-12
MAX_WINDOW = 50_000
SCAN_BRACKETS = 2000


@dataclass(frozen=True)
class EnergyPoint:
    """Reduced energy ``x = E - omega0`` with its position relative to the band.

    In-band points always carry the retarded ``x + i0`` prescription.
    """

    x: float
    side: str

    @classmethod
    def at(cls, x: float) -> EnergyPoint:
        x = float(x)
        if abs(x) == 1.0:
            raise SingularityError(f"x = {x} is a band edge")
        if x < -1:
            return cls(x, BELOW)
        if x > 1:
            return cls(x, ABOVE)
        return cls(x, IN_BAND)

    @classmethod
    def from_theta(cls, theta: float) -> EnergyPoint:
        """Band point ``E = omega0 - cos(theta)``."""
        return cls.at(-np.cos(theta))

    @property
    def theta(self) -> float:
        if self.side != IN_BAND:
            raise ValueError("theta is only defined inside the band")
        return float(np.arccos(-self.x))

    def energy(self, omega0: float) -> float:
        return omega0 + self.x


def _as_point(point) -> EnergyPoint:
    return point if isinstance(point, EnergyPoint) else EnergyPoint.at(point)


def green_free(delta: int, point) -> complex:
    """Free propagator ``G0(delta)`` at an off-band or retarded in-band energy.

    Examples
    --------
    >>> green_free(0, -5/3)
    (-0.75+0j)
    >>> abs(green_free(1, -5/3) + 0.25) < 1e-15
    True
    """
    point = _as_point(point)
    delta = abs(int(delta))
    if point.side == IN_BAND:
        theta = point.theta
        return -1j * np.exp(1j * theta * delta) / np.sin(theta)
    root = np.sqrt(point.x * point.x - 1.0)
    s = np.sign(point.x)
    lam = -point.x + s * root
    return complex(s * lam**delta / root)


def band_green(delta, theta) -> np.ndarray:
    """Vectorized retarded ``G0(delta)`` at ``E = omega0 - cos(theta)``.

    ``theta`` and ``-theta`` describe the same energy; ``|theta|`` is used.
    """
    th = np.abs(np.asarray(theta, dtype=float))
    delta = np.abs(np.asarray(delta))
    return -1j * np.exp(1j * th * delta) / np.sin(th)


def scattering_t(alpha: float, point) -> complex:
    """Single-defect scattering coefficient ``t = -alpha / (2 + alpha G0(0))``.

    Identical to the resummation ``v / (1 - v G0)`` with ``v = -alpha/2``.
    """
    point = _as_point(point)
    if alpha == 0:
        return 0j
    g0 = green_free(0, point)
    den = 2.0 + alpha * g0
    if abs(den) < 1e-13 * (2.0 + abs(alpha * g0)):
        pole = -np.sign(alpha) * np.sqrt(1.0 + alpha * alpha / 4.0)
        raise SingularityError(f"scattering pole for alpha={alpha} at x={pole:.15g}")
    return -alpha / den


@dataclass(frozen=True)
class ScatteringData:
    t1: complex
    t2: complex
    g11: complex
    g12: complex
    g21: complex
    g22: complex
    denom: complex


def scattering_data(defects: DefectConfig, point) -> ScatteringData:
    point = _as_point(point)
    g0 = green_free(0, point)
    gd = green_free(defects.d, point)
    t1 = scattering_t(defects.alpha1, point)
    t2 = scattering_t(defects.alpha2, point)
    return ScatteringData(t1, t2, g0, gd, gd, g0, 1.0 - t1 * t2 * gd * gd)


def tmatrix(defects: DefectConfig, point) -> np.ndarray:
    """2x2 T-matrix on the defect sites ``(l1, l2)``.

    Multiple scattering between the defects resums to
    ``[[t1, t1 G12 t2], [t2 G21 t1, t2]] / (1 - t1 t2 G12 G21)``.
    """
    sd = scattering_data(defects, point)
    if sd.denom == 0:
        raise SingularityError("T-matrix denominator vanishes (bound-state energy)")
    off = sd.t1 * sd.t2 * sd.g12
    return np.array([[sd.t1, off], [off, sd.t2]]) / sd.denom


def tmatrix_denominator(defects: DefectConfig, point):
    """``1 - t1 t2 G0(l1,l2) G0(l2,l1)``; real off the band."""
    point = _as_point(point)
    den = scattering_data(defects, point).denom
    return float(den.real) if point.side != IN_BAND else den


def band_tmatrix(defects: DefectConfig, theta) -> np.ndarray:
    """Vectorized retarded T-matrix at band points, shape ``(len(theta), 2, 2)``."""
    g0 = band_green(0, theta)
    gd = band_green(defects.d, theta)
    t1 = -defects.alpha1 / (2.0 + defects.alpha1 * g0)
    t2 = -defects.alpha2 / (2.0 + defects.alpha2 * g0)
    den = 1.0 - t1 * t2 * gd * gd
    off = t1 * t2 * gd / den
    out = np.empty(np.shape(g0) + (2, 2), dtype=complex)
    out[..., 0, 0] = t1 / den
    out[..., 1, 1] = t2 / den
    out[..., 0, 1] = off
    out[..., 1, 0] = off
    return out


@dataclass
class BoundState:
    """One discrete level outside the band.

    Amplitudes follow ``b_n = c (k1 lam**|n-l1| + k2 lam**|n-l2|)`` with
    ``|lam| = exp(-xi)`` and ``c`` fixing the unit norm over the whole chain.
    ``window_sites``/``b`` hold the amplitudes where the tails exceed 1e-12.
    """

    x_loc: float
    energy: float
    xi: float
    k1: float
    k2: float
    parity: str
    l1: int
    l2: int
    lam: float
    norm_const: float
    window_sites: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    truncation_error: float = 0.0

    @property
    def localization_length(self) -> float:
        return 1.0 / self.xi

    def amplitude(self, n):
        n = np.asarray(n)
        return self.norm_const * (self.k1 * self.lam ** np.abs(n - self.l1)
                                  + self.k2 * self.lam ** np.abs(n - self.l2))

    def concurrence(self, i: int, j: int) -> float:
        return float(2.0 * abs(self.amplitude(i) * self.amplitude(j)))


def _branch_eigenvalues(defects: DefectConfig, xi: np.ndarray, side: int):
    """Eigenvalues ``mu_+, mu_-`` of the 2x2 matrix ``V G0`` on the defect sites."""
    v1, v2 = defects.potentials
    sh = np.sinh(xi)
    g0 = side / sh
    gd = side * (-side * np.exp(-xi)) ** defects.d / sh
    a1, a2 = v1 * g0, v2 * g0
    disc = 0.25 * (a1 - a2) ** 2 + v1 * v2 * gd * gd
    with np.errstate(invalid="ignore"):
        root = np.sqrt(disc)
    mean = 0.5 * (a1 + a2)
    return mean + root, mean - root


def _scan_roots(defects: DefectConfig, side: int) -> list[float]:
    lam_max = 2.0 + max(abs(defects.alpha1), abs(defects.alpha2))
    xi_max = np.arccosh(1.0 + lam_max)
    grid = np.unique(np.concatenate([
        np.geomspace(1e-7, xi_max, SCAN_BRACKETS + 1),
        np.linspace(1e-7, xi_max, SCAN_BRACKETS + 1),
    ]))
    roots = []
    for branch in (0, 1):
        def h(xi, branch=branch):
            return _branch_eigenvalues(defects, np.asarray(xi), side)[branch] - 1.0

        vals = h(grid)
        ok = np.isfinite(vals)
        for k in np.nonzero(ok[:-1] & ok[1:] & (np.sign(vals[:-1]) != np.sign(vals[1:])))[0]:
            a, b = grid[k], grid[k + 1]
            try:
                r, info = brentq(h, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                 maxiter=200, full_output=True)
            except ValueError as exc:
                raise NumericalFailure(f"bound-state root finder failed in bracket [{a}, {b}]") from exc
            if not info.converged:
                raise NumericalFailure(f"bound-state root finder did not converge in [{a}, {b}]")
            roots.append(float(r))
    return roots


def bound_state_from_xi(defects: DefectConfig, xi: float, side: int, omega0: float = 2.0) -> BoundState:
    """Assemble the bi-localized amplitudes for a root ``x = side * cosh(xi)``."""
    a1, a2 = defects.alphas
    sh = np.sinh(xi)
    x = side * np.cosh(xi)
    lam = -side * np.exp(-xi)
    d = defects.d
    # (b_l1, b_l2) spans the null space of 1 - G0 V on the defect sites and
    # K_i is proportional to v_i b_i; take the better conditioned row
    v1, v2 = defects.potentials
    g0 = side / sh
    gd = side * lam**d / sh
    rows = [(gd * v2, 1.0 - g0 * v1), (1.0 - g0 * v2, gd * v1)]
    b1, b2 = max(rows, key=lambda r: abs(r[0]) + abs(r[1]))
    k1, k2 = v1 * b1, v2 * b2
    # overall scale of the weights |alpha_i / (2 sqrt(x^2-1) - alpha_i)|^(1/2);
    # the radicand is negative for the upper state, hence the modulus
    with np.errstate(divide="ignore"):
        closed = np.sqrt(np.abs(np.array([a1, a2]) / (2.0 * sh + side * np.array([a1, a2]))))
    size = np.hypot(k1, k2)
    scale = np.hypot(*closed) if np.all(np.isfinite(closed)) else 1.0
    k1, k2 = k1 * scale / size, k2 * scale / size
    if abs(k2) > abs(k1):
        k1, k2 = k1 * np.sign(k2), abs(k2)
    else:
        k1, k2 = abs(k1), k2 * np.sign(k1)
    # norm summed region by region: geometric tails outside the pair plus the
    # finite stretch between them.  The single closed form cancels badly for
    # band-edge levels with k1 ~ -k2.
    lam2 = lam * lam
    tail = lam2 / (1.0 - lam2)
    inner = np.arange(d + 1)
    norm2 = ((k1 + k2 * lam**d) ** 2 + (k1 * lam**d + k2) ** 2) * tail \
        + np.sum((k1 * lam**inner + k2 * lam ** (d - inner)) ** 2)
    c = 1.0 / np.sqrt(norm2)

    if a1 == a2:
        parity = "symmetric" if k1 * k2 > 0 else "antisymmetric"
    else:
        parity = "none"

    width = int(min(np.ceil(-np.log(WINDOW_TAIL) / xi) + 1, MAX_WINDOW))
    lo, hi = min(defects.sites), max(defects.sites)
    sites = np.arange(lo - width, hi + width + 1)
    state = BoundState(x_loc=float(x), energy=float(omega0 + x), xi=float(xi), k1=float(k1),
                       k2=float(k2), parity=parity, l1=defects.l1, l2=defects.l2,
                       lam=float(lam), norm_const=float(c), window_sites=sites,
                       b=np.empty(0))
    state.b = state.amplitude(sites)
    state.truncation_error = float(abs(1.0 - np.sum(state.b**2)))
    return state


def find_bound_states(defects: DefectConfig, omega0: float = 2.0) -> list[BoundState]:
    """All discrete levels, ascending in energy (at most two).

    Levels are resolved down to ``xi = 1e-7`` (localization length 1e7
    sites).  Closer to the threshold ``|1/a1 + 1/a2| = d`` the second level
    sits within double-precision rounding of the band edge and is not
    reported, although :func:`existence_count` still counts it.
    """
    if defects.alpha1 == 0 and defects.alpha2 == 0:
        return []
    states = []
    for side in (-1, 1):
        for xi in _scan_roots(defects, side):
            states.append(bound_state_from_xi(defects, xi, side, omega0))
    states.sort(key=lambda s: s.energy)
    return states


def secular_residual(defects: DefectConfig, x: float) -> float:
    """``det(1 - V G0)`` on the defect sites; zero exactly at bound-state energies."""
    v1, v2 = defects.potentials
    g0 = green_free(0, x).real
    gd = green_free(defects.d, x).real
    return float((1 - v1 * g0) * (1 - v2 * g0) - v1 * v2 * gd * gd)


def closed_form_d1(alpha1: float, alpha2: float) -> list[float]:
    """Bound-state energies ``x_loc`` of nearest-neighbour defects in closed form.

    Both signs of the square root are evaluated; values inside the band and
    spurious roots introduced by squaring (which do not solve the secular
    equation) are discarded.  The formula is 0/0 at ``alpha1*alpha2 = 1``,
    where the numeric finder is used instead.
    """
    den = 1.0 - alpha1 * alpha2
    defects = DefectConfig(0, 1, alpha1, alpha2)
    if abs(den) <= 1e-6:
        return [s.x_loc for s in find_bound_states(defects)]
    lead = alpha1 * alpha2 * (alpha1 + alpha2) / 4.0
    root = np.sqrt((1.0 + (alpha1 - alpha2) ** 2 / 4.0) * (1.0 - alpha1 * alpha2 / 2.0) ** 2)
    out = []
    for x in ((lead + root) / den, (lead - root) / den):
        if abs(x) <= 1.0 + 1e-12:
            continue
        if abs(secular_residual(defects, x)) < 1e-8:
            out.append(float(x))
    return sorted(out)


def existence_count(alpha1: float, alpha2: float, d: int) -> int:
    """Number of discrete levels for defects a distance ``d`` apart, without root finding.

    On either side of the band the secular determinant, written as a
    function of ``xi``, vanishes at the band edge with slope proportional to
    ``d*a1*a2 - (a1 + a2)`` (strengths signed towards that side).  Counting
    the sign changes on both sides gives ``1 + [|1/a1 + 1/a2| < d]`` for two
    nonzero defects of any signs.
    """
    if alpha1 == 0 and alpha2 == 0:
        return 0
    if alpha1 == 0 or alpha2 == 0:
        return 1
    return 2 if abs(1.0 / alpha1 + 1.0 / alpha2) < d else 1


def d1_existence_count(alpha1: float, alpha2: float) -> int:
    """Count for ``d = 1`` and positive strengths from ``1/alpha1 + 1/alpha2 >= 1``."""
    if alpha1 <= 0 or alpha2 <= 0:
        raise ValueError("the nearest-neighbour condition assumes positive strengths")
    return 1 if 1.0 / alpha1 + 1.0 / alpha2 >= 1.0 else 2


def ground_profile(defects: DefectConfig, ref_site: int, window: Iterable[int],
                   omega0: float = 2.0) -> dict[int, float]:
    """Ground-state concurrence between ``ref_site`` and every other site of ``window``.

    Returns an empty map when the chain has no discrete level.
    """
    states = find_bound_states(defects, omega0)
    if not states:
        return {}
    gs = states[0]
    b_ref = gs.amplitude(ref_site)
    return {int(n): float(2.0 * abs(b_ref * gs.amplitude(n))) for n in window if n != ref_site}


def defect_concurrence_vs_distance(alpha1: float, alpha2: float,
                                   d_range: Iterable[int]) -> list[tuple[int, float]]:
    """Ground-state ``C_{l1 l2}`` as a function of the defect separation."""
    out = []
    for d in d_range:
        states = find_bound_states(DefectConfig(0, d, alpha1, alpha2))
        out.append((int(d), states[0].concurrence(0, d) if states else 0.0))
    return out
