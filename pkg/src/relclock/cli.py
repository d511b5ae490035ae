"""Reproducible experiment runner for the clock simulator.

Subcommands
-----------
clock-bench
    Sweep the clock error norms (evolution, generator, commutator) and
    the analytic envelope over a list of dimensions.
evolve
    Run one trajectory (oracle conditioning or any integrator) and write
    the trajectory CSV plus a JSON sidecar with a config echo and
    summary metrics.
compare
    Run two evolve configurations sharing a grid and write per-time
    trace distance and fidelity.
sweep
    Repeat an evolve configuration along one axis (d, sigma, g, dt),
    optionally against a reference (the oracle, or the closed form of
    the same method), one summary row per value.

Configs are JSON documents; unknown keys are rejected everywhere.
Outputs are CSV (comma-separated, LF endings, 17 significant digits)
plus a JSON sidecar next to each CSV.  Identical configs produce
byte-identical outputs: no timestamps, no nondeterministic ordering.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4
conditioned-norm floor.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from . import _precise
from .analysis import distance
from .clockcore import (
    ClockModel,
    QuasiIdealParams,
    commutator_error,
    evolution_error,
    generator_error,
)
from .constraint import (
    CouplingG,
    Ensemble,
    GlobalState,
    SystemModel,
    history_state,
    kernel_states,
    load_state,
    stationary_state,
    total_hamiltonian,
)
from .dynamics import (
    IntegratorConfig,
    NormFloorError,
    Trajectory,
    export_trajectory,
    integrate_commutator,
    integrate_ideal,
    integrate_master,
    integrate_pure,
    oracle_trajectory,
    uniform_grid,
)

__all__ = ["main", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NORM_FLOOR = 4

# below this, float64 error norms are dominated by matvec noise and the
# benchmark recomputes them in extended precision
PRECISION_SWITCH = 1e-12

METHODS = ("oracle", "pure", "unitary", "master", "ideal")
SWEEP_AXES = ("d", "sigma", "g", "dt")


class ConfigError(ValueError):
    """Configuration document is malformed or inconsistent."""


# ---------------------------------------------------------------- config


class _Section:
    """Strict view of one config object: every key must be consumed."""

    def __init__(self, data: Dict[str, Any], context: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{context}: expected an object")
        self._data = data
        self._context = context
        self._seen = set()

    def _fetch(self, key, default, required):
        if key in self._data:
            self._seen.add(key)
            return self._data[key]
        if required:
            raise ConfigError(f"{self._context}: missing required key {key!r}")
        return default

    def number(self, key, default=None, required=False, positive=False):
        val = self._fetch(key, default, required)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{self._context}.{key}: expected a number")
        if positive and val <= 0:
            raise ConfigError(f"{self._context}.{key}: must be positive")
        return float(val)

    def integer(self, key, default=None, required=False):
        val = self._fetch(key, default, required)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{self._context}.{key}: expected an integer")
        return val

    def string(self, key, default=None, required=False, choices=None):
        val = self._fetch(key, default, required)
        if val is None:
            return None
        if not isinstance(val, str):
            raise ConfigError(f"{self._context}.{key}: expected a string")
        if choices is not None and val not in choices:
            raise ConfigError(
                f"{self._context}.{key}: {val!r} not in {sorted(choices)}"
            )
        return val

    def boolean(self, key, default=False):
        val = self._fetch(key, default, False)
        if not isinstance(val, bool):
            raise ConfigError(f"{self._context}.{key}: expected a boolean")
        return val

    def raw(self, key, default=None, required=False):
        return self._fetch(key, default, required)

    def child(self, key, required=False):
        val = self._fetch(key, None, required)
        if val is None:
            return None
        return _Section(val, f"{self._context}.{key}")

    def has(self, key):
        return key in self._data

    def finish(self):
        extra = sorted(set(self._data) - self._seen)
        if extra:
            raise ConfigError(f"{self._context}: unknown keys {extra}")


def _cnum(val, context: str) -> complex:
    if isinstance(val, bool):
        raise ConfigError(f"{context}: expected a number or [re, im] pair")
    if isinstance(val, (int, float)):
        return complex(val)
    if (
        isinstance(val, list)
        and len(val) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)
    ):
        return complex(val[0], val[1])
    raise ConfigError(f"{context}: expected a number or [re, im] pair")


def _cvector(val, context: str) -> np.ndarray:
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{context}: expected a non-empty array")
    return np.array([_cnum(x, f"{context}[{i}]") for i, x in enumerate(val)])


def _cmatrix(val, context: str) -> np.ndarray:
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{context}: expected a non-empty array of rows")
    rows = [_cvector(r, f"{context}[{i}]") for i, r in enumerate(val)]
    if len({r.size for r in rows}) != 1:
        raise ConfigError(f"{context}: rows have unequal lengths")
    return np.stack(rows)


def _pairs(vec: np.ndarray) -> List[List[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec).reshape(-1)]


@dataclass
class RunSpec:
    clock: ClockModel
    params: QuasiIdealParams
    system: SystemModel
    g: CouplingG
    grid: np.ndarray  # native time scale of the method
    method: str
    cfg: IntegratorConfig
    ensemble: Optional[Ensemble]  # oracle and master
    psi0: Optional[np.ndarray]  # pure
    rho0: Optional[np.ndarray]  # unitary and ideal
    echo: Dict[str, Any]


def _parse_clock(sec: _Section) -> Tuple[ClockModel, QuasiIdealParams, Dict]:
    d = sec.integer("d", required=True)
    omega = sec.number("omega", default=1.0, positive=True)
    sigma_raw = sec.raw("sigma", default="sqrt_d")
    j0_raw = sec.raw("j0", default="center")
    k0_raw = sec.raw("k0", default="center")
    sec.finish()
    if d is None or d < 2:
        raise ConfigError("clock.d: must be an integer >= 2")
    if sigma_raw == "sqrt_d":
        sigma = math.sqrt(d)
    elif isinstance(sigma_raw, (int, float)) and not isinstance(sigma_raw, bool):
        sigma = float(sigma_raw)
    else:
        raise ConfigError('clock.sigma: expected a number or "sqrt_d"')
    if j0_raw == "center":
        j0 = (d - 1) / 2
    elif isinstance(j0_raw, (int, float)) and not isinstance(j0_raw, bool):
        j0 = float(j0_raw)
    else:
        raise ConfigError('clock.j0: expected a number or "center"')
    if k0_raw == "center":
        k0 = d / 2
    elif isinstance(k0_raw, (int, float)) and not isinstance(k0_raw, bool):
        k0 = float(k0_raw)
    else:
        raise ConfigError('clock.k0: expected a number or "center"')
    clock = ClockModel(d=d, omega=omega)
    params = QuasiIdealParams(k0=k0, sigma=sigma, j0=j0)
    echo = {"d": d, "omega": omega, "sigma": sigma, "j0": j0, "k0": k0}
    return clock, params, echo


def _parse_system(
    sec: _Section, clock: ClockModel, g: CouplingG
) -> Tuple[SystemModel, Dict]:
    forms = [k for k in ("levels", "hamiltonian", "dressed_levels") if sec.has(k)]
    if len(forms) != 1:
        raise ConfigError(
            "system: exactly one of levels | hamiltonian | dressed_levels required"
        )
    if forms[0] == "levels":
        raw = sec.raw("levels")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("system.levels: expected a non-empty number array")
        levels = []
        for i, x in enumerate(raw):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"system.levels[{i}]: expected a number")
            levels.append(float(x))
        sysm = SystemModel.from_energies(levels)
        echo = {"levels": levels}
    elif forms[0] == "dressed_levels":
        raw = sec.raw("dressed_levels")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("system.dressed_levels: expected clock-level integers")
        ps = []
        for i, x in enumerate(raw):
            if isinstance(x, bool) or not isinstance(x, int):
                raise ConfigError(f"system.dressed_levels[{i}]: expected an integer")
            if not 0 <= x <= clock.d - 1:
                raise ConfigError(
                    f"system.dressed_levels[{i}]: {x} outside [0, {clock.d - 1}]"
                )
            ps.append(x)
        # energies solving the interacting kernel condition exactly:
        # E = -p*omega/(1 - p*omega*g) pairs level p with eigenvalue E
        levels = [
            -p * clock.omega / (1.0 - p * clock.omega * g.g) for p in ps
        ]
        sysm = SystemModel.from_energies(levels)
        echo = {"dressed_levels": ps}
    else:
        mat = _cmatrix(sec.raw("hamiltonian"), "system.hamiltonian")
        if mat.shape[0] != mat.shape[1]:
            raise ConfigError("system.hamiltonian: must be square")
        sysm = SystemModel.from_hamiltonian(mat)
        echo = {"hamiltonian": [_pairs(row) for row in mat]}
    sec.finish()
    return sysm, echo


def _normalized(vec: np.ndarray, context: str) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError(f"{context}: norm {norm!r} differs from 1 beyond 1e-9")
    return vec / norm


def _parse_global(
    sec: _Section,
    clock: ClockModel,
    sysm: SystemModel,
    g: CouplingG,
) -> Tuple[GlobalState, Dict]:
    kind = sec.string("type", required=True,
                      choices=("history", "stationary", "kernel", "file"))
    if kind == "history":
        psi0 = _normalized(
            _cvector(sec.raw("psi0", required=True), "global.psi0"), "global.psi0"
        )
        sec.finish()
        return history_state(sysm, clock, psi0), {
            "type": "history",
            "psi0": _pairs(psi0),
        }
    if kind == "stationary":
        coeff = _cvector(sec.raw("coefficients", required=True),
                         "global.coefficients")
        if coeff.size != sysm.dim_s:
            raise ConfigError(
                f"global.coefficients: expected {sysm.dim_s} entries"
            )
        sec.finish()
        coeff = coeff / np.linalg.norm(coeff)
        vec = np.zeros(clock.d * sysm.dim_s, dtype=np.complex128)
        for m, c in enumerate(coeff):
            if abs(c) == 0:
                continue
            vec += c * stationary_state(sysm, clock, g, m).vector
        state = GlobalState(d=clock.d, dim_s=sysm.dim_s,
                            vector=vec / np.linalg.norm(vec))
        return state, {"type": "stationary", "coefficients": _pairs(coeff)}
    if kind == "kernel":
        tol = sec.number("tol", default=1e-10, positive=True)
        index = sec.integer("index", default=0)
        sec.finish()
        h = total_hamiltonian(sysm, clock, g)
        found = kernel_states(h, tol, clock, sysm)
        if not found:
            raise ConfigError(
                f"global: no kernel state within tolerance {tol:g}"
            )
        if not 0 <= index < len(found):
            raise ConfigError(
                f"global.index: {index} outside the {len(found)} kernel states"
            )
        return found[index], {"type": "kernel", "tol": tol, "index": index}
    path = sec.string("path", required=True)
    sec.finish()
    state = load_state(path)
    if state.d != clock.d or state.dim_s != sysm.dim_s:
        raise ConfigError(
            f"global.path: state is ({state.d}, {state.dim_s}), run is "
            f"({clock.d}, {sysm.dim_s})"
        )
    return state, {"type": "file", "path": path}


def _parse_state(
    sec: _Section,
    clock: ClockModel,
    sysm: SystemModel,
    g: CouplingG,
    method: str,
) -> Tuple[Optional[Ensemble], Optional[np.ndarray], Optional[np.ndarray], Dict]:
    """Returns (ensemble, psi0, rho0, echo) with only the relevant slot set."""
    if method in ("oracle", "master"):
        if sec.has("ensemble"):
            raw = sec.raw("ensemble")
            if not isinstance(raw, list) or not raw:
                raise ConfigError("state.ensemble: expected a non-empty array")
            members, echo_members = [], []
            for i, item in enumerate(raw):
                isec = _Section(item, f"state.ensemble[{i}]")
                w = isec.number("weight", required=True, positive=True)
                gstate, gecho = _parse_global(
                    isec.child("global", required=True), clock, sysm, g
                )
                isec.finish()
                members.append((w, gstate))
                echo_members.append({"weight": w, "global": gecho})
            sec.finish()
            return (
                Ensemble(members=tuple(members)),
                None,
                None,
                {"ensemble": echo_members},
            )
        gstate, gecho = _parse_global(
            sec.child("global", required=True), clock, sysm, g
        )
        sec.finish()
        return Ensemble.pure(gstate), None, None, {"global": gecho}
    if method == "pure":
        psi0 = _normalized(
            _cvector(sec.raw("psi0", required=True), "state.psi0"), "state.psi0"
        )
        sec.finish()
        if psi0.size != sysm.dim_s:
            raise ConfigError(f"state.psi0: expected {sysm.dim_s} entries")
        return None, psi0, None, {"psi0": _pairs(psi0)}
    # unitary | ideal take a density matrix, or a pure vector for convenience
    if sec.has("rho0"):
        rho0 = _cmatrix(sec.raw("rho0"), "state.rho0")
        sec.finish()
        if rho0.shape != (sysm.dim_s, sysm.dim_s):
            raise ConfigError(
                f"state.rho0: expected shape ({sysm.dim_s}, {sysm.dim_s})"
            )
        return None, None, rho0, {"rho0": [_pairs(r) for r in rho0]}
    psi0 = _normalized(
        _cvector(sec.raw("psi0", required=True), "state.psi0"), "state.psi0"
    )
    sec.finish()
    if psi0.size != sysm.dim_s:
        raise ConfigError(f"state.psi0: expected {sysm.dim_s} entries")
    return None, None, np.outer(psi0, psi0.conj()), {"psi0": _pairs(psi0)}


def parse_run_config(doc: Dict[str, Any], context: str = "config") -> RunSpec:
    top = _Section(doc, context)
    time_scale = top.string("time_scale", default="grid",
                            choices=("grid", "physical"))
    clock, params, clock_echo = _parse_clock(top.child("clock", required=True))
    gsec = top.child("coupling", required=True)
    gval = gsec.number("g", required=True)
    gsec.finish()
    g = CouplingG(gval)
    sysm, sys_echo = _parse_system(top.child("system", required=True), clock, g)
    grid_sec = top.child("grid", required=True)
    t_max = grid_sec.number("t_max", required=True, positive=True)
    dt = grid_sec.number("dt", required=True, positive=True)
    grid_sec.finish()
    method = top.string("method", required=True, choices=METHODS)

    # native time scale: integrators run on the grid scale, the ideal
    # clock runs on physical time
    to_grid = 1.0 if time_scale == "grid" else 1.0 / clock.tick
    if method == "ideal":
        to_native = 1.0 if time_scale == "physical" else clock.tick
    else:
        to_native = to_grid if time_scale == "physical" else 1.0
    native_tmax, native_dt = t_max * to_native, dt * to_native

    isec = top.child("integrator")
    if isec is None:
        isec = _Section({}, f"{context}.integrator")
    default_method = "rk4" if method == "master" else "closed-form"
    cfg = IntegratorConfig(
        dt=native_dt,
        method=isec.string("method", default=default_method,
                           choices=("closed-form", "rk4")),
        second_term=isec.string(
            "second_term", default="truncated-bch",
            choices=("truncated-bch", "exact-conjugation"),
        ),
        ensemble_mode=isec.string(
            "ensemble_mode", default="evolve-then-mix",
            choices=("evolve-then-mix", "mix-then-evolve"),
        ),
        hermitize_potential=isec.boolean("hermitize_potential", default=False),
        force_zero_potential=isec.boolean("force_zero_potential", default=False),
    )
    isec.finish()

    ensemble, psi0, rho0, state_echo = _parse_state(
        top.child("state", required=True), clock, sysm, g, method
    )
    top.finish()

    grid = uniform_grid(native_tmax, native_dt)
    echo = {
        "time_scale": time_scale,
        "clock": clock_echo,
        "system": sys_echo,
        "coupling": {"g": gval},
        "grid": {"t_max": t_max, "dt": dt},
        "method": method,
        "integrator": {
            "method": cfg.method,
            "second_term": cfg.second_term,
            "ensemble_mode": cfg.ensemble_mode,
            "hermitize_potential": cfg.hermitize_potential,
            "force_zero_potential": cfg.force_zero_potential,
        },
        "state": state_echo,
    }
    return RunSpec(
        clock=clock, params=params, system=sysm, g=g, grid=grid,
        method=method, cfg=cfg, ensemble=ensemble, psi0=psi0, rho0=rho0,
        echo=echo,
    )


def run_trajectory(spec: RunSpec) -> Trajectory:
    if spec.method == "oracle":
        return oracle_trajectory(spec.ensemble, spec.clock, spec.params, spec.grid)
    if spec.method == "pure":
        return integrate_pure(
            spec.system, spec.clock, spec.g, spec.psi0, spec.grid, spec.cfg
        )
    if spec.method == "unitary":
        return integrate_commutator(
            spec.system, spec.clock, spec.g, spec.rho0, spec.grid, spec.cfg
        )
    if spec.method == "master":
        return integrate_master(
            spec.ensemble, spec.system, spec.clock, spec.params, spec.g,
            spec.grid, spec.cfg,
        )
    return integrate_ideal(spec.system, spec.g, spec.rho0, spec.grid, spec.cfg)


# ---------------------------------------------------------------- output


def _sidecar_path(out: str) -> str:
    return out[:-4] + ".json" if out.endswith(".csv") else out + ".json"


def _write_sidecar(out: str, payload: Dict[str, Any]) -> None:
    with open(_sidecar_path(out), "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_csv(out: str, header: List[str], rows: List[List[str]]) -> None:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    with open(out, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _summary(traj: Trajectory) -> Dict[str, Any]:
    out = {
        "points": int(len(traj.grid)),
        "final_purity": float(traj.purity[-1]),
        "max_trace_defect": float(traj.trace_defect.max()),
        "max_herm_defect": float(traj.herm_defect.max()),
    }
    if traj.oracle_norm is not None:
        out["min_oracle_norm"] = float(traj.oracle_norm.min())
    return out


# ------------------------------------------------------------ subcommands


def cmd_clock_bench(doc: Dict[str, Any], out: str) -> int:
    top = _Section(doc, "config")
    raw = top.raw("d_values", required=True)
    if not isinstance(raw, list) or not raw:
        raise ConfigError("d_values: expected a non-empty integer array")
    ds = []
    for i, x in enumerate(raw):
        if isinstance(x, bool) or not isinstance(x, int) or x < 2:
            raise ConfigError(f"d_values[{i}]: expected an integer >= 2")
        ds.append(x)
    sigma_raw = top.raw("sigma", default="sqrt_d")
    omega = top.number("omega", default=1.0, positive=True)
    eval_time = top.raw("eval_time", default="half-tick")
    alpha0 = top.number("alpha0")
    top.finish()

    rows = []
    for d in ds:
        if sigma_raw == "sqrt_d":
            sigma = math.sqrt(d)
        elif isinstance(sigma_raw, (int, float)) and not isinstance(sigma_raw, bool):
            sigma = float(sigma_raw)
        else:
            raise ConfigError('sigma: expected a number or "sqrt_d"')
        clock = ClockModel(d=d, omega=omega)
        k0 = d / 2
        j0 = (d - 1) / 2
        params = QuasiIdealParams(k0=k0, sigma=sigma, j0=j0)
        if eval_time == "half-tick":
            ticks = 0.5
        elif isinstance(eval_time, (int, float)) and not isinstance(eval_time, bool):
            ticks = float(eval_time) / clock.tick
        else:
            raise ConfigError('eval_time: expected a number or "half-tick"')
        t = ticks * clock.tick

        eps_evol = evolution_error(clock, params, t).numeric_norm
        gen = generator_error(clock, params, k0, alpha0=alpha0)
        eps_prime = gen.numeric_norm
        eps_comm = commutator_error(clock, params).numeric_norm
        # recompute anything float64 rounded into the noise floor
        if eps_evol < PRECISION_SWITCH:
            eps_evol = _precise.evolution_error_norm(d, sigma, j0, k0, ticks)
        if eps_prime < PRECISION_SWITCH:
            eps_prime = _precise.generator_error_norm(d, sigma, j0, k0)
        if eps_comm < PRECISION_SWITCH:
            eps_comm = _precise.commutator_error_norm(d, sigma, j0, k0, omega)
        bound = gen.analytic_bound
        rows.append([
            str(d), _fmt(sigma), _fmt(eps_evol), _fmt(eps_prime),
            _fmt(eps_comm), "" if bound is None else _fmt(bound),
        ])
    _write_csv(out, ["d", "sigma", "eps_evol", "eps_prime", "eps_comm", "bound"],
               rows)
    _write_sidecar(out, {
        "config": {
            "d_values": ds,
            "sigma": sigma_raw,
            "omega": omega,
            "eval_time": eval_time,
            "alpha0": alpha0,
        },
        "rows": len(rows),
    })
    return EXIT_OK


def cmd_evolve(doc: Dict[str, Any], out: str) -> int:
    spec = parse_run_config(doc)
    traj = run_trajectory(spec)
    export_trajectory(traj, out)
    _write_sidecar(out, {"config": spec.echo, "summary": _summary(traj)})
    return EXIT_OK


def cmd_compare(doc: Dict[str, Any], out: str) -> int:
    top = _Section(doc, "config")
    spec_a = parse_run_config(top.raw("run_a", required=True), "config.run_a")
    spec_b = parse_run_config(top.raw("run_b", required=True), "config.run_b")
    top.finish()
    if spec_a.system.dim_s != spec_b.system.dim_s:
        raise ConfigError("compare: system dimensions differ")
    if len(spec_a.grid) != len(spec_b.grid) or np.abs(
        spec_a.grid - spec_b.grid
    ).max() > 1e-12 * max(1.0, float(spec_a.grid[-1])):
        raise ConfigError("compare: grids differ between run_a and run_b")
    ta, tb = run_trajectory(spec_a), run_trajectory(spec_b)
    rows, dists, fids = [], [], []
    for i, tau in enumerate(ta.grid):
        metrics = distance(ta.states[i], tb.states[i])
        dists.append(metrics["trace_distance"])
        fids.append(metrics["fidelity"])
        rows.append([
            _fmt(tau), _fmt(metrics["trace_distance"]), _fmt(metrics["fidelity"]),
        ])
    _write_csv(out, ["tau", "trace_distance", "fidelity"], rows)
    _write_sidecar(out, {
        "config": {"run_a": spec_a.echo, "run_b": spec_b.echo},
        "summary": {
            "max_trace_distance": max(dists),
            "mean_trace_distance": sum(dists) / len(dists),
            "min_fidelity": min(fids),
        },
    })
    return EXIT_OK


def _apply_axis(doc: Dict[str, Any], axis: str, value) -> Dict[str, Any]:
    out = json.loads(json.dumps(doc))  # deep copy of plain JSON data
    if axis == "d":
        out.setdefault("clock", {})["d"] = value
    elif axis == "sigma":
        out.setdefault("clock", {})["sigma"] = value
    elif axis == "g":
        out.setdefault("coupling", {})["g"] = value
    else:
        out.setdefault("grid", {})["dt"] = value
    return out


def _sweep_point(base: Dict[str, Any], axis: str, value, reference) -> Dict[str, Any]:
    doc = _apply_axis(base, axis, value)
    if reference == "oracle":
        method = doc.get("method")
        if method not in ("unitary", "master"):
            raise ConfigError("sweep: reference 'oracle' supports unitary|master")
        # the state section carries the global state in both cases; the
        # oracle parse validates it, the unitary run conditions it at 0
        odoc = dict(doc)
        odoc["method"] = "oracle"
        spec = parse_run_config(odoc, "config.run")
        oracle = oracle_trajectory(spec.ensemble, spec.clock, spec.params, spec.grid)
        if method == "master":
            approx = run_trajectory(parse_run_config(doc, "config.run"))
        else:
            approx = integrate_commutator(
                spec.system, spec.clock, spec.g, oracle.states[0], spec.grid,
                spec.cfg,
            )
        err = distance(approx.states[-1], oracle.states[-1])["trace_distance"]
        return {"err": err}
    spec = parse_run_config(doc, "config.run")
    if reference == "closed-form":
        closed = run_trajectory(replace(spec, cfg=replace(spec.cfg, method="closed-form")))
        stepped = run_trajectory(replace(spec, cfg=replace(spec.cfg, method="rk4")))
        err = max(
            distance(a, b)["trace_distance"]
            for a, b in zip(closed.states, stepped.states)
        )
        return {"err": err}
    traj = run_trajectory(spec)
    return _summary(traj)


def cmd_sweep(doc: Dict[str, Any], out: str, jobs: int) -> int:
    top = _Section(doc, "config")
    axis = top.string("axis", required=True, choices=SWEEP_AXES)
    values_raw = top.raw("values", required=True)
    if not isinstance(values_raw, list) or not values_raw:
        raise ConfigError("values: expected a non-empty array")
    for i, v in enumerate(values_raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"values[{i}]: expected a number")
        if axis == "d" and not isinstance(v, int):
            raise ConfigError(f"values[{i}]: axis 'd' needs integers")
    reference = top.string("reference", choices=("oracle", "closed-form"))
    base = top.raw("run", required=True)
    if not isinstance(base, dict):
        raise ConfigError("run: expected an object")
    top.finish()

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(
                    lambda v: _sweep_point(base, axis, v, reference), values_raw
                )
            )
    else:
        results = [_sweep_point(base, axis, v, reference) for v in values_raw]

    if reference is None:
        header = ["axis", "value", "final_purity", "max_trace_defect",
                  "max_herm_defect"]
        rows = [
            [axis, _fmt(float(v)), _fmt(r["final_purity"]),
             _fmt(r["max_trace_defect"]), _fmt(r["max_herm_defect"])]
            for v, r in zip(values_raw, results)
        ]
    else:
        header = ["axis", "value", "err", "ratio"]
        rows = []
        for i, (v, r) in enumerate(zip(values_raw, results)):
            ratio = ""
            if i > 0 and r["err"] > 0:
                ratio = _fmt(results[i - 1]["err"] / r["err"])
            rows.append([axis, _fmt(float(v)), _fmt(r["err"]), ratio])
    _write_csv(out, header, rows)
    _write_sidecar(out, {
        "config": {
            "axis": axis,
            "values": values_raw,
            "reference": reference,
            "run": base,
        },
        "rows": len(rows),
    })
    return EXIT_OK


# ----------------------------------------------------------------- entry


_EPILOG = """\
config schema (JSON), shared by evolve and by compare/sweep sub-runs:
  time_scale   "grid" (default) | "physical"
  clock        {d, omega=1.0, sigma=<num|"sqrt_d">, j0=<num|"center">,
                k0=<num|"center">}
  system       exactly one of:
                 {"levels": [E0, ...]}              eigenvalues as given
                 {"hamiltonian": [[...], ...]}      entries <num|[re,im]>
                 {"dressed_levels": [p0, ...]}      E = -p*omega/(1-p*omega*g)
  coupling     {g}
  grid         {t_max, dt}
  method       oracle | pure | unitary | master | ideal
  integrator   {method="closed-form" ("rk4" for master), second_term,
                ensemble_mode, hermitize_potential, force_zero_potential}
  state        oracle/master: {"global": {...}} or
                 {"ensemble": [{"weight", "global"}...]} with global.type in
                 history | stationary | kernel | file
               pure: {"psi0": [...]}; unitary/ideal: {"psi0"} or {"rho0"}

clock-bench config: {d_values, sigma="sqrt_d", omega=1.0,
                     eval_time="half-tick", alpha0=null}
compare config:     {run_a: <run>, run_b: <run>}
sweep config:       {axis: d|sigma|g|dt, values, run: <run>,
                     reference: null|oracle|closed-form}

exit codes: 0 ok, 2 config error, 3 numerical failure, 4 norm floor.
"""


def _load_doc(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="relclock",
        description="Finite-clock relational dynamics: benchmarks, "
        "trajectories, comparisons, sweeps.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("clock-bench", "evolve", "compare", "sweep"):
        p = sub.add_parser(
            name,
            epilog=_EPILOG,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument(
            "--seed", type=int, default=None,
            help="reserved; all current algorithms are deterministic",
        )
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel sweep points")
    args = parser.parse_args(argv)

    try:
        doc = _load_doc(args.config)
        if args.command == "clock-bench":
            return cmd_clock_bench(doc, args.out)
        if args.command == "evolve":
            return cmd_evolve(doc, args.out)
        if args.command == "compare":
            return cmd_compare(doc, args.out)
        return cmd_sweep(doc, args.out, max(1, args.jobs))
    except NormFloorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NORM_FLOOR
    # LinAlgError subclasses ValueError, so the numerical bucket goes first
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
