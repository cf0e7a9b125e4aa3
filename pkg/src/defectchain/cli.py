"""Command-line front end: one experiment per run, data files plus a manifest.

Usage::

    python3 -m defectchain --experiment boundstates --alpha1 2 --alpha2 2 --l1 0 --l2 1
    python3 -m defectchain --config run.cfg --experiment rabi --out rabi.csv

Settings come from built-in defaults, then an optional flat ``key=value``
config file, then command-line flags (highest precedence).  Exit status is
0 on success, 2 for an invalid configuration and 3 for a numerical failure
or an unavailable protocol.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import make_schedule, propagate_time_dependent
from .errors import (ConfigurationError, NumericalFailure, NumericalWarning, ProtocolError,
                     SingularityError)
from .green import defect_concurrence_vs_distance, find_bound_states, ground_profile
from .lattice import (ChainSpec, DefectConfig, TransferRecord, horizon_margin, horizon_time,
                      oracle_amplitudes, oracle_size)
from .transfer import DEFAULT_NODES, DRIFT_TOL, analytic_amplitudes, gap_scaling, trap_metrics

EXPERIMENTS = ("statics", "inset", "rabi", "bounce", "trap", "adiabatic", "sweep", "boundstates")
DYNAMICS = ("rabi", "bounce", "trap")
METHODS = ("analytic", "oracle", "both")
FORMATS = ("csv", "json")
COMPARE_TOL = 1e-3

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

SERIES_HEADER = ("t", "site", "concurrence")
PROFILE_HEADER = ("site", "concurrence")
INSET_HEADER = ("d", "concurrence")


@dataclass
class RunConfig:
    """Fully resolved settings of one run.

    ``None`` entries are filled in by :meth:`resolve` from the geometry
    (sender, receiver, window, oracle size).
    """

    experiment: str = "boundstates"
    omega0: float = 2.0
    alpha1: float = 1.5
    alpha2: float = 1.5
    l1: int = 0
    l2: int = 5
    sender: int | None = None
    receiver: int | None = None
    tmax: float = 100.0
    dt: float = 0.1
    n_sites: int | None = None
    method: str = "analytic"
    quad_nodes: int = DEFAULT_NODES
    out: str | None = None
    format: str | None = None
    # experiment-specific knobs (config file or long flags)
    window: int = 20
    d_max: int = 10
    shape: str = "smoothstep"
    alpha_max: float = 5.0
    alpha_min: float = 0.05
    crossing_alpha: float = 0.3

    def resolve(self) -> RunConfig:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"experiment must be one of {EXPERIMENTS}")
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}")
        if self.method != "analytic" and self.experiment not in DYNAMICS:
            raise ConfigurationError(f"method={self.method} applies to dynamics experiments only")
        if self.format is None:
            self.format = "json" if self.experiment in ("boundstates", "adiabatic", "sweep") else "csv"
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}")
        if self.experiment in ("adiabatic", "sweep") and self.format != "json":
            raise ConfigurationError(f"{self.experiment} emits structured results; use format=json")
        if self.quad_nodes < 2 or self.quad_nodes % 2:
            raise ConfigurationError("quad_nodes must be a positive even number")
        if not (self.tmax > 0 and self.dt > 0):
            raise ConfigurationError("tmax and dt must be positive")
        if self.window < 0 or self.d_max < 1:
            raise ConfigurationError("window must be >= 0 and d_max >= 1")
        if self.sender is None:
            between = self.experiment in ("bounce", "trap")
            self.sender = (self.l1 + self.l2) // 2 if between else self.l1
        if self.receiver is None:
            self.receiver = self.sender if self.experiment == "trap" else self.l2
        if self.out is None:
            self.out = f"{self.experiment}.{self.format}"
        # validates omega0 and the defect sites
        ChainSpec(self.omega0, 3)
        self.defects()
        return self

    def defects(self) -> DefectConfig:
        return DefectConfig(int(self.l1), int(self.l2), float(self.alpha1), float(self.alpha2))

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.tmax, int(round(self.tmax / self.dt)) + 1)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    kind = _TYPES[key]
    if value.lower() in ("none", ""):
        return None
    if "float" in kind:
        return float(value)
    if "int" in kind:
        return int(value)
    return value


def read_config_file(path: str | Path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment, dashes equal underscores."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="defectchain", description="Two-defect XX chain experiments.")
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    for name, kind in [("omega0", float), ("alpha1", float), ("alpha2", float), ("l1", int),
                       ("l2", int), ("sender", int), ("receiver", int), ("tmax", float),
                       ("dt", float), ("n-sites", int), ("quad-nodes", int), ("window", int),
                       ("d-max", int), ("alpha-max", float), ("alpha-min", float),
                       ("crossing-alpha", float)]:
        p.add_argument(f"--{name}", type=kind)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--shape", choices=("linear", "smoothstep"))
    p.add_argument("--out")
    return p


def load_config(argv=None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    merged = read_config_file(args.pop("config")) if args.get("config") else {}
    merged.update({k: v for k, v in args.items() if v is not None})
    return RunConfig(**merged).resolve()


# --------------------------------------------------------------------------
# output schemas


def _num(x) -> str:
    """Shortest repr that round-trips; integers stay integers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def parse_csv(text: str):
    """Inverse of :func:`format_csv`: header tuple and rows of numbers."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    rows = [[int(v) if v.lstrip("-").isdigit() else float(v) for v in row] for row in reader]
    return header, rows


def format_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table(header, rows, fmt: str) -> str:
    if fmt == "csv":
        return format_csv(header, rows)
    return format_json({"columns": list(header), "rows": [list(r) for r in rows]})


def series_rows(times, sites, conc):
    """Site-major rows ``(t, site, C)`` from ``conc[t, site]``."""
    return [(float(t), int(n), float(conc[k, j]))
            for j, n in enumerate(sites) for k, t in enumerate(times)]


# --------------------------------------------------------------------------
# experiments


@dataclass
class Outcome:
    text: str
    summary: dict
    nodes: dict


def _analytic(cfg: RunConfig, sites, times):
    defects = cfg.defects()
    f = analytic_amplitudes(defects, cfg.sender, sites, times, cfg.quad_nodes, cfg.omega0)
    f2 = analytic_amplitudes(defects, cfg.sender, sites, times, 2 * cfg.quad_nodes, cfg.omega0)
    drift = float(np.max(np.abs(np.abs(f) - np.abs(f2))))
    if drift > DRIFT_TOL:
        warnings.warn(f"quadrature with {cfg.quad_nodes} nodes drifts by {drift:.2e} on doubling",
                      NumericalWarning, stacklevel=2)
        raise NumericalFailure(f"quadrature self-check failed (drift {drift:.2e}); "
                               f"raise quad_nodes above {cfg.quad_nodes}")
    return f, drift


def _oracle(cfg: RunConfig, sites, times):
    active = [cfg.sender, cfg.l1, cfg.l2, *sites]
    n = cfg.n_sites or oracle_size(active, cfg.tmax)
    spec = ChainSpec(cfg.omega0, n, "ring")
    for s in active:
        spec.index(s)
    horizon = horizon_time(spec, active)
    ok = cfg.tmax <= horizon - horizon_margin(horizon)
    f = oracle_amplitudes(spec, cfg.defects(), cfg.sender, times)
    return f[:, [spec.index(s) for s in sites]], n, ok


def _dynamics_sites(cfg: RunConfig) -> list[int]:
    if cfg.experiment == "rabi":
        return [cfg.l1, cfg.l2]
    if cfg.experiment == "trap":
        return [cfg.receiver]
    lo, hi = min(cfg.l1, cfg.l2), max(cfg.l1, cfg.l2)
    return list(range(lo - cfg.window, hi + cfg.window + 1))


def run_dynamics(cfg: RunConfig) -> Outcome:
    times, sites = cfg.times(), _dynamics_sites(cfg)
    defects = cfg.defects()
    summary, nodes = {}, {"quad_nodes": None, "n_sites": None}
    if cfg.experiment == "rabi":
        states = find_bound_states(defects, cfg.omega0)
        if len(states) < 2:
            raise ProtocolError("Rabi transfer unavailable: fewer than two bound states")
        summary["omega_r"] = states[1].energy - states[0].energy
    f = None
    if cfg.method in ("analytic", "both"):
        f, drift = _analytic(cfg, sites, times)
        nodes["quad_nodes"] = cfg.quad_nodes
        summary["quad_drift"] = drift
    if cfg.method in ("oracle", "both"):
        g, n, ok = _oracle(cfg, sites, times)
        nodes["n_sites"] = n
        summary["horizon_ok"] = bool(ok)
        if f is None:
            f = g
        else:
            dev = float(np.max(np.abs(np.abs(f) - np.abs(g))))
            summary["max_deviation"] = dev
            print(f"max |C_analytic - C_oracle| = {dev:.3e} (tolerance {COMPARE_TOL:g})")
            if dev > COMPARE_TOL:
                raise NumericalFailure(f"analytic and oracle differ by {dev:.3e}")
    conc = np.abs(f)
    if cfg.experiment == "trap":
        states = find_bound_states(defects, cfg.omega0)
        if not states:
            raise ProtocolError("trapping needs a localized level")
        record = TransferRecord(cfg.sender, cfg.receiver, times, f[:, 0], conc[:, 0], cfg.method)
        rep = trap_metrics(record, states[0])
        summary.update(parabola_coeff=rep.parabola_coeff, parabola_offset=rep.parabola_offset,
                       fit_residual=rep.fit_residual, residual=rep.residual,
                       bound_weight=rep.bound_weight)
    text = _table(SERIES_HEADER, series_rows(times, sites, conc), cfg.format)
    return Outcome(text, summary, nodes)


def run_boundstates(cfg: RunConfig) -> Outcome:
    states = find_bound_states(cfg.defects(), cfg.omega0)
    obj = {"omega0": cfg.omega0, "l1": cfg.l1, "l2": cfg.l2, "alpha1": cfg.alpha1,
           "alpha2": cfg.alpha2,
           "states": [{"energy": s.energy, "x_loc": s.x_loc, "xi": s.xi, "k1": s.k1,
                       "k2": s.k2, "parity": s.parity} for s in states]}
    if cfg.format == "csv":
        rows = [(s.energy, s.x_loc, s.xi, s.k1, s.k2) for s in states]
        return Outcome(format_csv(("energy", "x_loc", "xi", "k1", "k2"), rows),
                       {"count": len(states)}, {})
    return Outcome(format_json(obj), {"count": len(states)}, {})


def run_statics(cfg: RunConfig) -> Outcome:
    lo, hi = min(cfg.l1, cfg.l2), max(cfg.l1, cfg.l2)
    window = range(lo - cfg.window, hi + cfg.window + 1)
    profile = ground_profile(cfg.defects(), cfg.sender, window, cfg.omega0)
    rows = sorted(profile.items())
    partner = cfg.l2 if cfg.sender == cfg.l1 else cfg.l1
    summary = {"reference": cfg.sender, "partner_concurrence": profile.get(partner)}
    return Outcome(_table(PROFILE_HEADER, rows, cfg.format), summary, {})


def run_inset(cfg: RunConfig) -> Outcome:
    rows = defect_concurrence_vs_distance(cfg.alpha1, cfg.alpha2, range(1, cfg.d_max + 1))
    return Outcome(_table(INSET_HEADER, rows, cfg.format), {}, {})


def run_sweep(cfg: RunConfig) -> Outcome:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalWarning)
        fit = gap_scaling(cfg.alpha1, range(1, cfg.d_max + 1), cfg.omega0)
    obj = {"alpha": cfg.alpha1, "distances": fit.distances.tolist(), "gaps": fit.gaps.tolist(),
           "periods": (2 * np.pi / fit.gaps).tolist(), "slope": fit.slope,
           "intercept": fit.intercept, "r2": fit.r2, "excluded": fit.excluded}
    return Outcome(format_json(obj), {"r2": fit.r2}, {})


def run_adiabatic(cfg: RunConfig) -> Outcome:
    schedule = make_schedule(cfg.shape, cfg.alpha_max, cfg.alpha_min, cfg.tmax,
                             cfg.crossing_alpha, (cfg.l1, cfg.l2))
    n = cfg.n_sites or 201
    spec = ChainSpec(cfg.omega0, n, "open")
    res = propagate_time_dependent(spec, schedule, dt=cfg.dt)
    obj = {"duration": cfg.tmax, "shape": cfg.shape, "alpha_max": cfg.alpha_max,
           "alpha_min": cfg.alpha_min, "crossing_alpha": cfg.crossing_alpha,
           "l1": cfg.l1, "l2": cfg.l2, "fidelity": res.fidelity,
           "site_population": res.site_population, "norm_drift": res.norm_drift,
           "max_adiabatic_param": res.max_adiabatic_param, "min_gap": res.min_gap,
           "dt": res.dt, "dt_check_delta": res.dt_check_delta}
    return Outcome(format_json(obj), {"fidelity": res.fidelity}, {"n_sites": n})


RUNNERS = {"boundstates": run_boundstates, "statics": run_statics, "inset": run_inset,
           "sweep": run_sweep, "adiabatic": run_adiabatic,
           "rabi": run_dynamics, "bounce": run_dynamics, "trap": run_dynamics}


def run(cfg: RunConfig) -> Outcome:
    """Execute ``cfg`` and write the data file and ``<out>.manifest.json``."""
    outcome = RUNNERS[cfg.experiment](cfg)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(outcome.text)
    manifest = {"config": asdict(cfg), "version": __version__, "nodes": outcome.nodes,
                "summary": outcome.summary, "output": out.name}
    Path(f"{cfg.out}.manifest.json").write_text(format_json(manifest))
    return outcome


def main(argv=None) -> int:
    try:
        cfg = load_config(argv)
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"protocol unavailable: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericalFailure, SingularityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
