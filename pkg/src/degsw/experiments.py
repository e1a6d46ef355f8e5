"""Experiment drivers behind the command line: run, stability, continuation, sweep, verify."""
from __future__ import annotations

import copy
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .config import (ConfigError, RunConfig, build_state, density_profile, dumps, from_dict,
                     perturbed_pair, profile_seam, to_dict, velocity_profile)
from .grid import l6_d1, seminorm, sobolev, write_snapshot
from .inequalities import commutator_verify, gn_verify, lame_regularity_verify
from .model import ModelSpec, State, Variant, convert
from .monitors import c_ladder_report, monitor
from .picard import IterationTrace, Trajectory, delta_continuation, picard_solve

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    pass


def fresh_dir(base) -> Path:
    """``base`` if it is missing or empty, else the first free ``base-1``, ``base-2``, ..."""
    base = Path(base)
    cand, i = base, 0
    while cand.exists() and any(cand.iterdir()):
        i += 1
        cand = base.with_name(f"{base.name}-{i}")
    cand.mkdir(parents=True, exist_ok=True)
    return cand


def _solve_kw(cfg: RunConfig) -> dict:
    return dict(tol=cfg.tol, max_sweeps=cfg.max_sweeps, width=cfg.width, scheme=cfg.scheme,
                metric=cfg.metric)


def solve_with_retry(state: State, spec: ModelSpec, cfg: RunConfig,
                     horizon: float | None = None) -> tuple[Trajectory, IterationTrace, int]:
    """picard_solve, halving the horizon after each non-convergent attempt (``cfg.retries`` times)."""
    H = cfg.horizon if horizon is None else horizon
    for attempt in range(cfg.retries + 1):
        traj, trace = picard_solve(state, spec, H, cfg.dt, **_solve_kw(cfg))
        if trace.converged:
            return traj, trace, attempt
        steps = int(round(H / cfg.dt))
        if attempt == cfg.retries or steps < 2:
            break
        H = cfg.dt * max(1, steps // 2)
        log.warning("no convergence in %d sweeps; retrying with horizon %g", cfg.max_sweeps, H)
    return traj, trace, attempt


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _snapshots(out: Path, traj: Trajectory) -> None:
    st = traj.final()
    write_snapshot(out / "phi_final.snap", traj.grid, st.phi, "phi", st.t)
    write_snapshot(out / "psi_final.snap", traj.grid, st.psi, "psi", st.t)
    write_snapshot(out / "u_final.snap", traj.grid, st.u, "u", st.t)


@dataclass
class RunResult:
    out: Path
    trajectory: Trajectory
    trace: IterationTrace
    summary: dict


def run(cfg: RunConfig, out) -> RunResult:
    """Solve one scenario; write trace.csv, monitors.csv, summary.json and final snapshots."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sc = cfg.scenario
    state = build_state(sc)
    traj, trace, retries = solve_with_retry(state, sc.model, cfg)
    trace.write_csv(out / "trace.csv")
    mon = monitor(traj, sc.model, cfg.ceiling)
    mon.write_csv(out / "monitors.csv")
    _snapshots(out, traj)
    summary = {
        "converged": trace.converged,
        "sweeps": len(trace.sweeps),
        "horizon_used": trace.T_star_used,
        "retries": retries,
        "gamma_ratios": [float(x) for x in trace.ratios()],
        "conservation": mon.conservation.as_dict(),
        "mass_drift_per_time": mon.conservation.mass_drift / max(trace.T_star_used, 1e-300),
        "blowup_functional": mon.blowup.functional,
        "blowup_flagged_at": mon.blowup.flagged_at,
        "seam_density": profile_seam(sc),
    }
    if len(traj.times) >= 3:
        lad = c_ladder_report(traj, sc.model, phi_inf=sc.reg.delta)
        summary["c_ladder"] = {"groups": lad.groups.tolist(), "c0": lad.c0,
                               "implied_C": lad.implied_C.tolist(), "T_star": lad.T_star}
    _write_json(out / "summary.json", summary)
    (out / "config.toml").write_text(dumps(cfg))
    return RunResult(out, traj, trace, summary)


# stability --------------------------------------------------------------------

@dataclass
class StabilityReport:
    times: np.ndarray
    distance: np.ndarray        # left-hand distance d(t)
    initial_distance: float
    converged: tuple[bool, bool]

    @property
    def amplification(self) -> np.ndarray:
        if self.initial_distance == 0:
            return np.zeros_like(self.distance)
        return self.distance / self.initial_distance

    @property
    def C_meas(self) -> float:
        return float(np.max(self.amplification))

    @property
    def final_distance(self) -> float:
        return float(self.distance[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "distance", "amplification"])
            for t, d, a in zip(self.times, self.distance, self.amplification):
                w.writerow([repr(float(t)), repr(float(d)), repr(float(a))])


def stability_distance(a: Trajectory, b: Trajectory) -> np.ndarray:
    """||dphi||_2 + |dpsi|_{L6∩D1} + ||du||_2 + int_0^t ||grad du||_2^2 ds at every level."""
    g = a.grid
    m = len(a.times)
    pointwise = np.empty(m)
    grad_sq = np.empty(m)
    for i in range(m):
        du = a.u[i] - b.u[i]
        pointwise[i] = (sobolev(g, a.phi[i] - b.phi[i], 2) + l6_d1(g, a.psi[i] - b.psi[i])
                        + sobolev(g, du, 2))
        grad_sq[i] = sum(seminorm(g, du, k, 2) ** 2 for k in (1, 2, 3))
    return pointwise + cumulative_trapezoid(grad_sq, a.times, initial=0.0)


def stability_experiment(pair: tuple[State, State], spec: ModelSpec, horizon: float, dt: float,
                         **solve_kw) -> StabilityReport:
    ta, tra = picard_solve(pair[0], spec, horizon, dt, **solve_kw)
    tb, trb = picard_solve(pair[1], spec, horizon, dt, **solve_kw)
    d = stability_distance(ta, tb)
    if not (tra.converged and trb.converged):
        log.warning("stability pair: a member did not converge; partial report")
    return StabilityReport(ta.times.copy(), d, float(d[0]), (tra.converged, trb.converged))


def run_stability(cfg: RunConfig, out) -> dict:
    """Distances for perturbations eps and eps/2 against the same base run."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sc = cfg.scenario
    eps = cfg.perturbation
    kw = _solve_kw(cfg)
    base, full = perturbed_pair(sc, eps)
    _, half = perturbed_pair(sc, eps / 2)
    tb, trb = picard_solve(base, sc.model, cfg.horizon, cfg.dt, **kw)
    reports = {}
    for name, st in (("eps", full), ("eps_half", half)):
        tp, trp = picard_solve(st, sc.model, cfg.horizon, cfg.dt, **kw)
        d = stability_distance(tb, tp)
        rep = StabilityReport(tb.times.copy(), d, float(d[0]), (trb.converged, trp.converged))
        rep.write_csv(out / f"stability_{name}.csv")
        reports[name] = rep
    ratio = reports["eps"].final_distance / reports["eps_half"].final_distance
    summary = {
        "perturbation": eps,
        "final_distance_eps": reports["eps"].final_distance,
        "final_distance_eps_half": reports["eps_half"].final_distance,
        "halving_ratio": ratio,
        "C_meas": reports["eps"].C_meas,
        "C_meas_half": reports["eps_half"].C_meas,
        "converged": all(all(r.converged) for r in reports.values()),
    }
    _write_json(out / "stability.json", summary)
    return summary


# continuation -----------------------------------------------------------------

def run_continuation(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    sc = cfg.scenario
    phi0 = convert(density_profile(sc), "rho->phi", sc.model)
    res = delta_continuation(sc.grid, phi0, velocity_profile(sc), sc.model, cfg.deltas,
                             cfg.horizon, cfg.dt, sc.reg, **_solve_kw(cfg))
    with open(out / "continuation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta_a", "delta_b", "gamma_distance"])
        for (a, b), d in zip(zip(res.deltas, res.deltas[1:]), res.distances):
            w.writerow([repr(a), repr(b), repr(d)])
    for d, tr in zip(res.deltas, res.traces):
        tr.write_csv(out / f"trace_delta_{d:g}.csv")
    dist = res.distances
    summary = {"deltas": res.deltas, "distances": dist, "all_converged": res.all_converged,
               "strictly_decreasing": bool(all(b < a for a, b in zip(dist, dist[1:])))}
    _write_json(out / "continuation.json", summary)
    return summary


# sweep ------------------------------------------------------------------------

SWEEP_ALIASES = {
    "gamma": ("model", "gamma"), "alpha": ("model", "alpha"), "beta": ("model", "beta"),
    "A": ("model", "A"), "n": ("scenario", "n"), "box_length": ("scenario", "box_length"),
    "sigma": ("scenario", "profile", "sigma"), "amplitude": ("scenario", "profile", "amplitude"),
    "u_amplitude": ("scenario", "u0", "amplitude"), "delta": ("regularization", "delta"),
    "dt": ("run", "dt"), "horizon": ("run", "horizon"), "tol": ("run", "tol"),
    "width": ("run", "width"), "max_sweeps": ("run", "max_sweeps"),
}


def with_param(cfg: RunConfig, param: str, value: str) -> RunConfig:
    """Copy of ``cfg`` with one field replaced; ``param`` is an alias or a dotted path."""
    path = SWEEP_ALIASES.get(param, tuple(param.split(".")))
    data = copy.deepcopy(to_dict(cfg))
    node = data
    for key in path[:-1]:
        if key not in node or not isinstance(node[key], dict):
            raise ConfigError(f"--param {param}: unknown config path")
        node = node[key]
    if path[-1] not in node:
        raise ConfigError(f"--param {param}: unknown config path")
    old = node[path[-1]]
    if isinstance(old, bool) or isinstance(old, str):
        node[path[-1]] = value
    elif isinstance(old, int):
        node[path[-1]] = int(value)
    else:
        node[path[-1]] = float(value)
    return from_dict(data)


def _sweep_member(args):
    cfg, out = args
    res = run(cfg, out)
    return res.trace.converged, len(res.trace.sweeps)


def run_sweep(cfg: RunConfig, param: str, values: list[str], out, threads: int = 1) -> list[dict]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    members = [with_param(cfg, param, v) for v in values]  # validate all before running any
    jobs = [(m, out / f"{param}={v}") for m, v in zip(members, values)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_member, jobs))
    else:
        results = [_sweep_member(j) for j in jobs]
    rows = [{"param": param, "value": v, "dir": str(d.name), "converged": c, "sweeps": s}
            for v, (_, d), (c, s) in zip(values, jobs, results)]
    with open(out / "index.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["param", "value", "dir", "converged", "sweeps"])
        w.writeheader()
        w.writerows(rows)
    return rows


# inequality lab ------------------------------------------------------------------

def run_verify(cfg: RunConfig, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.scenario.model
    a, b = (spec.alpha, spec.beta) if spec.variant is not Variant.LAPLACIAN_ONLY else (1.0, -1.0)
    reps = {
        "gn": gn_verify(cfg.samples, 2, 6, 2, cfg.seed, n=cfg.lab_n),
        "commutator": commutator_verify(1, "a3-b6", cfg.samples, cfg.seed, n=cfg.lab_n),
        "lame": lame_regularity_verify(0, 2, cfg.samples, cfg.seed, alpha=a, beta=b, n=cfg.lab_n),
    }
    for name, rep in reps.items():
        rep.write_csv(out / f"{name}.csv")
    summary = {name: {"max_ratio": rep.max_ratio, "samples": len(rep.lhs), "skipped": rep.skipped}
               for name, rep in reps.items()}
    _write_json(out / "inequalities.json", summary)
    return summary
