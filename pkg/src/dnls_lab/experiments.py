"""Experiment harness tying the solver, trace and norm modules into
reproducible runs with JSON reports."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .fourier import Field, TorusGrid, l2_norm, make_grid
from .norms import NormParams, besov_norm, norm_report, z_norm
from .solver import SolverConfig, Trajectory, conserved_quantities, evolve, rescale
from .traces import alpha_series

KINDS = ("conservation", "apriori", "convergence", "rescaling")
UTILITY_KINDS = ("simulate", "alpha", "norms")

DEFAULT_TOLERANCES = {
    "alpha_drift": 1e-5,
    "mpe_drift": 1e-8,
    "apriori_ratio": 5.0,
    "tail_slope_slack": 0.5,
    "l2_equality": 1e-12,
    "series_tail": 1e-6,
}

# What each check asserts, embedded in reports next to failures.
CLAIMS = {
    "alpha_drift": "the perturbation determinant alpha(kappa; q(t)) is constant along the flow",
    "alpha_converged": "the determinant series converges geometrically for small L^2 data",
    "mpe_drift": "the classical invariants M, P, E stay constant along the flow",
    "apriori_ratio": "sup_t ||q(t)||_B / ||q(0)||_B stays bounded for small L^2 data",
    "ratio_below_one": "the determinant series converges geometrically for small L^2 data",
    "tail_slope": "|alpha - alpha_1| <~ kappa^{-4s'} ||q||_{H^{s'}}^4",
    "l2_equality": "the L^2 norm is invariant under the scaling map",
    "z_decreasing": "the Z^s_r norm of the rescaled data becomes small as lambda grows",
}


def _check_small_data(value):
    if value is not None and value > 0.25:
        raise ValueError(f"l2_target {value} exceeds the small-data bound 0.25")


@dataclass(frozen=True)
class SeriesConfig:
    l_max: int = 6
    truncation_radius: float | None = None
    tol: float = 1e-14


@dataclass
class ExperimentConfig:
    kind: str
    initial_data: dict
    grid: dict = field(default_factory=lambda: {"lambda": 1.0, "n_points": 64})
    solver: dict | None = None
    kappas: list = field(default_factory=lambda: [1.0, 2.0, 4.0])
    norm_params: dict = field(default_factory=lambda: {"s": 0.25, "r": 2.0})
    norm_sweep: list | None = None
    lambdas: list = field(default_factory=lambda: [1, 2, 4, 8])
    series: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS + UTILITY_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.kind in ("conservation", "apriori"):
            _check_small_data(self.initial_data.get("l2_target"))
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def make_grid(self) -> TorusGrid:
        return make_grid(self.grid.get("lambda", 1.0), self.grid["n_points"])

    def solver_config(self) -> SolverConfig:
        if self.solver is None:
            raise ValueError(f"{self.kind} needs a 'solver' section")
        return SolverConfig(**self.solver)

    def series_config(self) -> SeriesConfig:
        return SeriesConfig(**self.series)

    def norm_list(self) -> list[NormParams]:
        sweep = self.norm_sweep or [self.norm_params]
        return [NormParams(s=p["s"], r=_parse_r(p.get("r", 2.0)), dyadic_max=p.get("dyadic_max"),
                           start_exponent=p.get("start_exponent", 1)) for p in sweep]


def _parse_r(r) -> float:
    return math.inf if r in ("inf", "infinity", math.inf) else float(r)


# --- initial data -------------------------------------------------------------

def plane_wave(grid: TorusGrid, c: complex, k: float) -> Field:
    return grid.field_from_values(c * np.exp(1j * k * grid.x))


def gaussian(grid: TorusGrid, amplitude: float, width: float, center: float | None = None,
             carrier: float = 0.0) -> Field:
    """Periodized Gaussian amplitude * exp(-(x - x0)^2 / (2 width^2) + i carrier x).

    Built from its Fourier coefficients, which are the line transform sampled
    on Z / lambda, so no seam appears at the period boundary.
    """
    x0 = grid.length / 2 if center is None else center
    xi = grid.modes
    spec = amplitude * width * np.exp(-0.5 * ((xi - carrier) * width) ** 2 - 1j * (xi - carrier) * x0)
    return grid.field_from_spectrum(spec)


def random_band(grid: TorusGrid, seed: int, bandwidth: float, l2_target: float) -> Field:
    """Complex Gaussian coefficients on |xi| <= bandwidth, scaled to hit ``l2_target``."""
    rng = np.random.default_rng(seed)
    sel = np.abs(grid.modes) <= bandwidth
    spec = np.zeros(grid.n_points, dtype=complex)
    spec[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    f = grid.field_from_spectrum(spec)
    return f * (l2_target / l2_norm(f))


def build_initial_data(params: dict, grid: TorusGrid, dealias_fraction: float = 2.0 / 3.0) -> Field:
    """Instantiate a named data family; ``c`` may be given as [re, im]."""
    params = dict(params)
    family = params.pop("family")
    if family == "plane-wave":
        c = params.get("c", 0.1)
        c = complex(*c) if isinstance(c, (list, tuple)) else complex(c)
        f = plane_wave(grid, c, params.get("k", 1))
    elif family == "gaussian":
        f = gaussian(grid, **params)
    elif family == "random-band":
        f = random_band(grid, **params)
    elif family == "zero":
        f = grid.zeros()
    else:
        raise ValueError(f"unknown initial data family {family!r}")
    cutoff = dealias_fraction * grid.nyquist
    outside = np.abs(grid.modes) > cutoff
    peak = np.abs(f.spectrum).max()
    if peak > 0 and np.abs(f.spectrum[outside]).max(initial=0.0) > 1e-14 * peak:
        raise ValueError("initial data is not resolved: spectrum above 1e-14 beyond the dealias cutoff")
    spectrum = np.where(outside, 0.0, f.spectrum)
    return grid.field_from_spectrum(spectrum)


# --- reports -----------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _num(self.value), "tolerance": _num(self.tolerance),
                "passed": bool(self.passed), "claim": CLAIMS.get(self.name, ""), "detail": self.detail}


def _num(x):
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


SUMMARY_KEYS = {"max_drift_alpha": None, "max_drift_MPE": None, "norm_ratio_sup": None}


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    diagnostics: list
    summary: dict
    checks: list
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c.to_dict() for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "summary": {**SUMMARY_KEYS, **{k: _jsonify(v) for k, v in self.summary.items()},
                        "pass": self.passed},
            "checks": [c.to_dict() for c in self.checks],
            "failures": self.failures,
            "diagnostics": _jsonify(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, out_dir, snapshots: bool = True) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        if self.trajectory is not None and snapshots:
            self.trajectory.export(out / "snapshots")
        if self.diagnostics and "t" in self.diagnostics[0]:
            write_plotdata(self.diagnostics, out / "plotdata.csv")
        return out / "report.json"


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float, int, np.integer)):
        return _num(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_plotdata(rows: list, path) -> None:
    """plotdata.csv: t, alpha_k*, M, P, E, besov, z (whichever are present)."""
    keys = ["t"] + sorted(k for k in rows[0] if k.startswith("alpha_k") and "_" not in k[7:]) + \
        [k for k in ("M", "P", "E", "besov", "z") if k in rows[0]]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for row in rows:
            w.writerow([repr(float(row[k])) for k in keys])


def _kappa_key(kappa: float) -> str:
    return f"alpha_k{kappa:g}"


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _relative_drift(values) -> float:
    v = np.asarray(values, dtype=float)
    scale = abs(v[0])
    spread = float(np.max(np.abs(v - v[0])))
    if scale == 0.0:
        return spread
    return spread / scale


# --- storylines --------------------------------------------------------------------

def _setup(cfg: ExperimentConfig):
    grid = cfg.make_grid()
    solver = cfg.solver_config() if cfg.solver is not None else None
    frac = solver.dealias_fraction if solver else 2.0 / 3.0
    return grid, solver, build_initial_data(cfg.initial_data, grid, frac)


def run_conservation(cfg: ExperimentConfig) -> ExperimentReport:
    grid, solver, q0 = _setup(cfg)
    traj = evolve(q0, cfg.solver_config())
    sc = cfg.series_config()
    tol = cfg.tolerances

    def per_snapshot(args):
        t, q = args
        row = {"t": t, **conserved_quantities(q)}
        conv = True
        for kappa in cfg.kappas:
            ts = alpha_series(q, kappa, sc.tol, sc.l_max, sc.truncation_radius,
                              tail_tol=tol["series_tail"])
            row[_kappa_key(kappa)] = ts.alpha
            row[_kappa_key(kappa) + "_leading"] = float(ts.terms[0].real)
            conv &= ts.converged
        row["converged"] = bool(conv)
        return row

    rows = _pmap(per_snapshot, list(zip(traj.times.tolist(), traj.snapshots)), cfg.workers)
    alpha_drifts = {k: _relative_drift([r[_kappa_key(k)] for r in rows]) for k in cfg.kappas}
    leading_drifts = {k: _relative_drift([r[_kappa_key(k) + "_leading"] for r in rows])
                      for k in cfg.kappas}
    mpe = {name: _relative_drift([r[name] for r in rows]) for name in ("M", "P", "E")}
    max_alpha = max(alpha_drifts.values())
    max_mpe = max(mpe.values())
    bad = [r["t"] for r in rows if not r["converged"]]
    checks = [
        Check("alpha_drift", max_alpha, tol["alpha_drift"], max_alpha <= tol["alpha_drift"]),
        Check("mpe_drift", max_mpe, tol["mpe_drift"], max_mpe <= tol["mpe_drift"]),
        Check("alpha_converged", float(len(bad)), 0.0, not bad,
              f"series not converged at t={bad[0]:g}" if bad else ""),
    ]
    summary = {
        "max_drift_alpha": max_alpha,
        "max_drift_MPE": max_mpe,
        "alpha_drift_by_kappa": {f"{k:g}": v for k, v in alpha_drifts.items()},
        "leading_term_drift_by_kappa": {f"{k:g}": v for k, v in leading_drifts.items()},
        "mpe_drift": mpe,
        "solver_mass_drift": traj.mass_drift,
    }
    return ExperimentReport("conservation", asdict(cfg), rows, summary, checks, traj)


def run_apriori(cfg: ExperimentConfig) -> ExperimentReport:
    grid, solver, q0 = _setup(cfg)
    traj = evolve(q0, solver)
    params = cfg.norm_list()
    ceiling = cfg.tolerances["apriori_ratio"]

    def norms_at(q):
        return [(besov_norm(q, p), z_norm(q, p)) for p in params]

    table = _pmap(norms_at, traj.snapshots, cfg.workers)
    base = table[0]
    rows, sweep, checks = [], [], []
    for t, vals, q in zip(traj.times, table, traj.snapshots):
        row = {"t": float(t), "besov": vals[0][0], "z": vals[0][1]}
        row.update(conserved_quantities(q))
        rows.append(row)
    worst = 0.0
    for i, p in enumerate(params):
        b0, z0 = base[i]
        rb = max(v[i][0] for v in table) / b0 if b0 > 0 else 1.0
        rz = max(v[i][1] for v in table) / z0 if z0 > 0 else 1.0
        sweep.append({"s": p.s, "r": _num(p.r), "besov_ratio": rb, "z_ratio": rz})
        worst = max(worst, rb)
        checks.append(Check("apriori_ratio", rb, ceiling, rb <= ceiling, f"s={p.s:g}, r={p.r:g}"))
    summary = {"norm_ratio_sup": worst, "sweep": sweep, "l2_initial": l2_norm(q0)}
    return ExperimentReport("apriori", asdict(cfg), rows, summary, checks, traj)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def run_convergence(cfg: ExperimentConfig) -> ExperimentReport:
    grid = cfg.make_grid()
    q0 = build_initial_data(cfg.initial_data, grid)
    sc = cfg.series_config()
    tol = cfg.tolerances
    p = cfg.norm_list()[0]
    s_prime = min(0.25, p.s)
    if not np.any(q0.spectrum):
        checks = [Check("ratio_below_one", 0.0, 1.0, True, "zero data: empty series")]
        return ExperimentReport("convergence", asdict(cfg), [], {"terms": []}, checks)

    series = _pmap(lambda k: alpha_series(q0, k, 0.0, sc.l_max, sc.truncation_radius,
                                          tail_tol=tol["series_tail"]), cfg.kappas, cfg.workers)
    rows = [ts.to_dict() for ts in series]
    checks = [Check("ratio_below_one", ts.ratio_estimate, 1.0, ts.ratio_estimate < 1,
                    f"kappa={ts.kappa:g}") for ts in series]
    tails = [abs(ts.alpha - ts.terms[0].real) for ts in series]
    summary = {"ratios": [ts.ratio_estimate for ts in series], "tails": tails,
               "s_prime": s_prime}
    if len(cfg.kappas) >= 2 and all(t > 0 for t in tails):
        slope = loglog_slope(cfg.kappas, tails)
        bound = -4 * s_prime + tol["tail_slope_slack"]
        summary["tail_slope"] = slope
        summary["tail_slope_bound"] = bound
        checks.append(Check("tail_slope", slope, bound, slope <= bound))
    return ExperimentReport("convergence", asdict(cfg), rows, summary, checks)


def run_rescaling(cfg: ExperimentConfig) -> ExperimentReport:
    grid = cfg.make_grid()
    if grid.lam != 1.0:
        raise ValueError("rescaling experiments start from data on T_1")
    q0 = build_initial_data(cfg.initial_data, grid)
    p = cfg.norm_list()[0]
    if p.dyadic_max is None:
        p = NormParams(p.s, p.r, 1 << math.ceil(math.log2(grid.nyquist)), p.start_exponent)
    rows = []
    for lam in cfg.lambdas:
        ql = rescale(q0, lam, cfg.grid.get("rescaled_n_points"))
        rows.append({"lambda": float(lam), "l2": l2_norm(ql), "z": z_norm(ql, p)})
    l2 = np.array([r["l2"] for r in rows])
    z = np.array([r["z"] for r in rows])
    spread = float(np.max(np.abs(l2 - l2[0])) / l2[0]) if l2[0] > 0 else 0.0
    decreasing = bool(np.all(np.diff(z) < 0)) if z[0] > 0 else True
    checks = [
        Check("l2_equality", spread, cfg.tolerances["l2_equality"],
              spread <= cfg.tolerances["l2_equality"]),
        Check("z_decreasing", float(np.max(np.diff(z), initial=-math.inf)), 0.0, decreasing),
    ]
    summary = {"l2": l2.tolist(), "z": z.tolist(), "dyadic_max": p.dyadic_max}
    return ExperimentReport("rescaling", asdict(cfg), rows, summary, checks)


def run_simulate(cfg: ExperimentConfig) -> ExperimentReport:
    grid, solver, q0 = _setup(cfg)
    traj = evolve(q0, solver)
    rows = [{"t": float(t), **conserved_quantities(q), "l2": l2_norm(q)}
            for t, q in zip(traj.times, traj.snapshots)]
    mpe = {name: _relative_drift([r[name] for r in rows]) for name in ("M", "P", "E")}
    max_mpe = max(mpe.values())
    checks = [Check("mpe_drift", max_mpe, cfg.tolerances["mpe_drift"],
                    max_mpe <= cfg.tolerances["mpe_drift"])]
    summary = {"max_drift_MPE": max_mpe, "mpe_drift": mpe, "n_snapshots": len(rows)}
    return ExperimentReport("simulate", asdict(cfg), rows, summary, checks, traj)


def run_alpha(cfg: ExperimentConfig) -> ExperimentReport:
    grid = cfg.make_grid()
    q0 = build_initial_data(cfg.initial_data, grid)
    sc = cfg.series_config()
    series = _pmap(lambda k: alpha_series(q0, k, sc.tol, sc.l_max, sc.truncation_radius,
                                          tail_tol=cfg.tolerances["series_tail"]),
                   cfg.kappas, cfg.workers)
    checks = [Check("alpha_converged", ts.ratio_estimate, 1.0, ts.converged, f"kappa={ts.kappa:g}")
              for ts in series]
    summary = {"alpha": {f"{ts.kappa:g}": ts.alpha for ts in series}}
    return ExperimentReport("alpha", asdict(cfg), [ts.to_dict() for ts in series], summary, checks)


def run_norms(cfg: ExperimentConfig) -> ExperimentReport:
    grid = cfg.make_grid()
    q0 = build_initial_data(cfg.initial_data, grid)
    rows = [norm_report(q0, p).to_dict() for p in cfg.norm_list()]
    return ExperimentReport("norms", asdict(cfg), rows, {"l2": l2_norm(q0)}, [])


RUNNERS = {
    "simulate": run_simulate,
    "alpha": run_alpha,
    "norms": run_norms,
    "conservation": run_conservation,
    "apriori": run_apriori,
    "convergence": run_convergence,
    "rescaling": run_rescaling,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.kind](cfg)
