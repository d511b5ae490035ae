"""Relational equations of motion and the exact conditioning oracle.

The oracle trajectory conditions a constrained global state on the
Gaussian clock at each requested time; it involves no dynamical
approximation and serves as ground truth.  The integrators solve the
derived equations of motion on the system alone:

* a first-order unitary pair (pure Schroedinger form and its von
  Neumann counterpart) generated by the dilated Hamiltonian,
* a memory-kernel master equation whose right-hand side carries an
  explicit initial-state term and a time-convolution over the past
  potential history (non-local and non-linear), and
* the ideal-clock limit, which differs from the unitary pair only by
  the grid-to-physical time rescaling.

All integrators run on the grid time scale except the ideal-clock one.
Trace is conserved to integrator accuracy by construction (every term
is a commutator); hermiticity of the state under the non-Hermitian
potential is monitored per point and reported, never enforced.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .clockcore import ClockModel, QuasiIdealParams, energy_to_time, generator_error
from .constraint import (
    CouplingG,
    Ensemble,
    GlobalState,
    SystemModel,
    condition_qic,
)

__all__ = [
    "DilatedHamiltonian",
    "Potential",
    "Trajectory",
    "IntegratorConfig",
    "NormFloorError",
    "uniform_grid",
    "dilated_hamiltonian",
    "oracle_trajectory",
    "integrate_pure",
    "integrate_commutator",
    "build_potential",
    "integrate_master",
    "master_rhs",
    "integrate_ideal",
    "export_trajectory",
]

NORM_FLOOR = 1e-12


class NormFloorError(RuntimeError):
    """Conditioned state norm fell below the resolvable floor."""


@dataclass(frozen=True)
class DilatedHamiltonian:
    """Generator (T/d) H_S (1 + g H_S) of the unitary part, grid time scale."""

    matrix: np.ndarray
    g: float
    period: float
    d: int

    @property
    def tick(self) -> float:
        return self.period / self.d


@dataclass(frozen=True)
class Potential:
    """Clock-error-driven coupling term of the master equation at one time.

    Generally non-Hermitian; the defect is recorded, never zeroed.
    """

    matrix: np.ndarray
    tau: float
    hermiticity_defect: float


@dataclass(frozen=True)
class Trajectory:
    grid: np.ndarray
    states: np.ndarray  # (n, dim_s, dim_s)
    trace_defect: np.ndarray
    herm_defect: np.ndarray
    purity: np.ndarray
    method: str
    oracle_norm: Optional[np.ndarray] = None  # min member norm before renormalization

    def __post_init__(self):
        if len(self.grid) != len(self.states):
            raise ValueError("grid and states lengths differ")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration policy knobs.

    dt is the step used by grid builders; the integrators themselves
    step on the intervals of the grid they are handed.  second_term
    selects how the initial-state term of the master equation treats
    the elapsed time (series truncation versus exact conjugation), and
    ensemble_mode selects whether mixing happens before or after
    integration.  force_zero_potential switches the master equation
    into its exactly-unitary reduction.
    """

    dt: float = 0.01
    method: str = "closed-form"
    memory_quadrature: str = "trapezoid"
    second_term: str = "truncated-bch"
    ensemble_mode: str = "evolve-then-mix"
    hermitize_potential: bool = False
    force_zero_potential: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.method not in ("closed-form", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.memory_quadrature != "trapezoid":
            raise ValueError(f"unknown memory quadrature {self.memory_quadrature!r}")
        if self.second_term not in ("truncated-bch", "exact-conjugation"):
            raise ValueError(f"unknown second_term {self.second_term!r}")
        if self.ensemble_mode not in ("evolve-then-mix", "mix-then-evolve"):
            raise ValueError(f"unknown ensemble_mode {self.ensemble_mode!r}")


def uniform_grid(horizon: float, dt: float) -> np.ndarray:
    """Uniform grid 0..horizon inclusive; horizon must be a multiple of dt."""
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not a multiple of dt {dt}")
    return np.linspace(0.0, n * dt, n + 1)


def _diagnose(states: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    tr = np.abs(np.einsum("nii->n", states) - 1.0)
    herm = np.array(
        [float(np.linalg.norm(s - s.conj().T)) for s in states]
    )
    pur = np.real(np.einsum("nij,nji->n", states, states))
    return tr, herm, pur


def _finish(grid, states, method, oracle_norm=None) -> Trajectory:
    states = np.asarray(states)
    tr, herm, pur = _diagnose(states)
    return Trajectory(
        grid=np.asarray(grid, dtype=np.float64),
        states=states,
        trace_defect=tr,
        herm_defect=herm,
        purity=pur,
        method=method,
        oracle_norm=oracle_norm,
    )


def dilated_hamiltonian(
    sys: SystemModel, clock: ClockModel, g: CouplingG
) -> DilatedHamiltonian:
    """Exact matrix polynomial (T/d) H_S (1 + g H_S)."""
    g.check_regime(sys.energies)
    hs = sys.hamiltonian
    mat = clock.tick * (hs + g.g * (hs @ hs))
    return DilatedHamiltonian(matrix=mat, g=g.g, period=clock.period, d=clock.d)


def oracle_trajectory(
    ens: Ensemble,
    clock: ClockModel,
    params: QuasiIdealParams,
    grid: np.ndarray,
) -> Trajectory:
    """Exact relational trajectory by conditioning every member on the clock.

    Each conditioned vector is normalized before the convex mix; the
    smallest pre-normalization norm per time is kept as a diagnostic.
    """
    dim_s = ens.members[0][1].dim_s
    states = np.empty((len(grid), dim_s, dim_s), dtype=np.complex128)
    norms = np.empty(len(grid))
    for i, tau in enumerate(grid):
        rho = np.zeros((dim_s, dim_s), dtype=np.complex128)
        floor = np.inf
        for w, member in ens.members:
            vec = condition_qic(member, clock, params, float(tau))
            nv = float(np.linalg.norm(vec))
            if nv < NORM_FLOOR:
                raise NormFloorError(
                    f"conditioned norm {nv:.3e} below floor at tau = {float(tau):g}"
                )
            floor = min(floor, nv)
            unit = vec / nv
            rho += w * np.outer(unit, unit.conj())
        states[i] = rho
        norms[i] = floor
    return _finish(grid, states, "oracle", oracle_norm=norms)


def _check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if np.linalg.norm(rho - rho.conj().T) > 1e-10:
        raise ValueError("rho0 is not Hermitian to 1e-10")
    if abs(np.trace(rho).real - 1.0) > 1e-9 or abs(np.trace(rho).imag) > 1e-12:
        raise ValueError("rho0 does not have unit trace")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -1e-10:
        raise ValueError("rho0 is not positive semidefinite to 1e-10")
    return rho


def _conjugation_states(
    sys: SystemModel, lam: np.ndarray, rho0: np.ndarray, grid: np.ndarray
) -> np.ndarray:
    """rho(t) = U rho0 U^dag with U = exp(-i lam t) in the eigenframe."""
    modes = sys.modes
    rt0 = modes.conj().T @ rho0 @ modes
    gaps = lam[:, None] - lam[None, :]
    out = np.empty((len(grid), len(lam), len(lam)), dtype=np.complex128)
    for i, t in enumerate(grid):
        out[i] = modes @ (np.exp(-1j * gaps * t) * rt0) @ modes.conj().T
    return out


def _rk4(rhs, y0: np.ndarray, grid: np.ndarray) -> List[np.ndarray]:
    ys = [y0]
    y = y0
    for i in range(len(grid) - 1):
        t, h = grid[i], grid[i + 1] - grid[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        ys.append(y)
    return ys


def integrate_pure(
    sys: SystemModel,
    clock: ClockModel,
    g: CouplingG,
    psi0: np.ndarray,
    grid: np.ndarray,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Schroedinger evolution under the dilated Hamiltonian, grid time."""
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise ValueError("psi0 must be normalized")
    hd = dilated_hamiltonian(sys, clock, g)
    if cfg.method == "closed-form":
        lam = clock.tick * sys.energies * (1.0 + g.g * sys.energies)
        coeff = sys.modes.conj().T @ psi0
        vecs = [
            sys.modes @ (np.exp(-1j * lam * t) * coeff) for t in grid
        ]
    else:
        mat = hd.matrix
        vecs = _rk4(lambda t, y: -1j * (mat @ y), psi0, grid)
    states = np.stack([np.outer(v, v.conj()) for v in vecs])
    return _finish(grid, states, "pure")


def integrate_commutator(
    sys: SystemModel,
    clock: ClockModel,
    g: CouplingG,
    rho0: np.ndarray,
    grid: np.ndarray,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Unitary von Neumann evolution under the dilated Hamiltonian."""
    rho0 = _check_density(rho0)
    hd = dilated_hamiltonian(sys, clock, g)
    if cfg.method == "closed-form":
        lam = clock.tick * sys.energies * (1.0 + g.g * sys.energies)
        states = _conjugation_states(sys, lam, rho0, grid)
    else:
        mat = hd.matrix
        states = np.stack(
            _rk4(lambda t, y: -1j * (mat @ y - y @ mat), rho0, grid)
        )
    return _finish(grid, states, "unitary")


def build_potential(
    psi: GlobalState,
    sys: SystemModel,
    clock: ClockModel,
    params: QuasiIdealParams,
    tau: float,
    g: CouplingG,
    hermitize: bool = False,
) -> Potential:
    """Rank-one coupling term driven by the clock generator error.

    The generator-error vector is contracted against the global state on
    the clock index, dressed by the coupling-dependent prefactor, and
    paired with the normalized conditioned state as the bra side.  The
    result is genuinely non-Hermitian; the defect norm is recorded.
    """
    eps = generator_error(clock, params, tau).components
    eps_time = energy_to_time(clock, eps)
    e_s = 1j * (eps_time.conj() @ psi.matrix)
    dressing = g.g * (1.0 + clock.d / clock.period)
    e_sg = e_s + dressing * (sys.hamiltonian @ e_s)
    cond = condition_qic(psi, clock, params, tau)
    nv = float(np.linalg.norm(cond))
    if nv < NORM_FLOOR:
        raise NormFloorError(
            f"degenerate effective state (norm {nv:.3e}) at tau = {tau!r}"
        )
    v = np.outer(e_sg, cond.conj() / nv)
    if hermitize:
        v = (v + v.conj().T) / 2
    return Potential(
        matrix=v,
        tau=float(tau),
        hermiticity_defect=float(np.linalg.norm(v - v.conj().T)),
    )


def _memory_integral(
    vstack: np.ndarray,
    vhalf: Optional[np.ndarray],
    rho: np.ndarray,
    gaps: np.ndarray,
    dt: float,
    j: int,
    half: bool,
) -> np.ndarray:
    """Trapezoid of exp(-i gaps (u-s)) o [V(s), rho] over s in [0, u].

    u = grid[j] when half is false, grid[j] + dt/2 otherwise; the half
    case appends the partial interval [grid[j], u] with the midpoint
    potential vhalf[j].
    """
    from .kernels import memory_accumulate

    if j == 0 and not half:
        return np.zeros_like(rho)
    n = j + 1
    vs = vstack[:n]
    comms = vs @ rho - rho @ vs
    us = (np.arange(n)[::-1] * dt).astype(np.float64)
    weights = np.full(n, dt)
    weights[0] = weights[-1] = dt / 2
    if n == 1:
        weights[0] = 0.0
    if half:
        us = us + dt / 2
        weights[-1] += dt / 4
        cmid = vhalf[j] @ rho - rho @ vhalf[j]
        comms = np.concatenate([comms, cmid[None]])
        us = np.concatenate([us, [0.0]])
        weights = np.concatenate([weights, [dt / 4]])
    return memory_accumulate(
        np.ascontiguousarray(comms), gaps, us, weights
    )


def _master_single(
    rho0: np.ndarray,
    vgrid: np.ndarray,
    lam: np.ndarray,
    grid: np.ndarray,
    cfg: IntegratorConfig,
) -> np.ndarray:
    """Integrate one master trajectory in the eigenframe of the generator."""
    dt = float(grid[1] - grid[0])
    gaps = lam[:, None] - lam[None, :]
    vhalf = (vgrid[:-1] + vgrid[1:]) / 2  # linear interpolation at half steps
    c0 = gaps * rho0  # [H_d, rho0] in the eigenframe
    exact = cfg.second_term == "exact-conjugation"

    def rhs(u, rho, vu, j, half):
        out = -1j * (gaps * rho)
        if exact:
            rho0_back = np.exp(1j * gaps * u) * rho0
            out += -1j * (vu @ rho0_back - rho0_back @ vu)
        else:
            out += -1j * (vu @ rho0 - rho0 @ vu)
            out += u * (vu @ c0 - c0 @ vu)
        mem = _memory_integral(vgrid, vhalf, rho, gaps, dt, j, half)
        out -= vu @ mem - mem @ vu
        return out

    states = np.empty((len(grid),) + rho0.shape, dtype=np.complex128)
    states[0] = rho0
    rho = rho0
    for i in range(len(grid) - 1):
        t = float(grid[i])
        k1 = rhs(t, rho, vgrid[i], i, False)
        k2 = rhs(t + dt / 2, rho + dt / 2 * k1, vhalf[i], i, True)
        k3 = rhs(t + dt / 2, rho + dt / 2 * k2, vhalf[i], i, True)
        k4 = rhs(t + dt, rho + dt * k3, vgrid[i + 1], i + 1, False)
        rho = rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[i + 1] = rho
    return states


def _master_inputs(
    ens: Ensemble,
    sys: SystemModel,
    clock: ClockModel,
    params: QuasiIdealParams,
    g: CouplingG,
    grid: np.ndarray,
    cfg: IntegratorConfig,
):
    """Per-member eigenframe initial states and potential grids."""
    modes = sys.modes
    rho0s, vgrids = [], []
    for _, member in ens.members:
        vec = condition_qic(member, clock, params, float(grid[0]))
        nv = float(np.linalg.norm(vec))
        if nv < NORM_FLOOR:
            raise NormFloorError(f"conditioned norm {nv:.3e} below floor at start")
        unit = modes.conj().T @ (vec / nv)
        rho0s.append(np.outer(unit, unit.conj()))
        if cfg.force_zero_potential:
            vgrids.append(
                np.zeros((len(grid), sys.dim_s, sys.dim_s), dtype=np.complex128)
            )
        else:
            vg = np.empty((len(grid), sys.dim_s, sys.dim_s), dtype=np.complex128)
            for i, tau in enumerate(grid):
                pot = build_potential(
                    member, sys, clock, params, float(tau), g,
                    hermitize=cfg.hermitize_potential,
                )
                vg[i] = modes.conj().T @ pot.matrix @ modes
            vgrids.append(vg)
    return rho0s, vgrids


def integrate_master(
    ens: Ensemble,
    sys: SystemModel,
    clock: ClockModel,
    params: QuasiIdealParams,
    g: CouplingG,
    grid: np.ndarray,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Memory-kernel master equation with explicit initial-state dependence.

    The right-hand side at elapsed time u is the dilated commutator plus
    an initial-state term (series-truncated or exactly conjugated, per
    cfg.second_term) and minus the commutator of the present potential
    with the phase-propagated integral of past potential commutators.
    Potentials are precomputed on the grid per ensemble member and
    averaged at half steps.  With evolve-then-mix each member evolves
    under its own potential and the outputs are mixed; mix-then-evolve
    feeds the mixed initial state and the weight-averaged potential
    through one integration.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if len(grid) < 2:
        raise ValueError("grid needs at least two points")
    if abs(float(grid[0])) > 1e-12:
        raise ValueError("master integration grid must start at 0")
    steps = np.diff(grid)
    if steps.min() <= 0 or np.ptp(steps) > 1e-12 * max(1.0, abs(float(grid[-1]))):
        raise ValueError("master integration requires a uniform increasing grid")
    g.check_regime(sys.energies)
    lam = clock.tick * sys.energies * (1.0 + g.g * sys.energies)
    modes = sys.modes

    if cfg.method == "closed-form":
        if not cfg.force_zero_potential:
            raise ValueError(
                "closed-form master integration is only exact with "
                "force_zero_potential; use method='rk4'"
            )
        rho0s, _ = _master_inputs(ens, sys, clock, params, g, grid, cfg)
        rho0_lab = sum(
            w * (modes @ r0 @ modes.conj().T)
            for (w, _), r0 in zip(ens.members, rho0s)
        )
        states = _conjugation_states(sys, lam, rho0_lab, grid)
        return _finish(grid, states, "master")

    rho0s, vgrids = _master_inputs(ens, sys, clock, params, g, grid, cfg)
    weights = [w for w, _ in ens.members]
    if cfg.ensemble_mode == "mix-then-evolve":
        rho0 = sum(w * r for w, r in zip(weights, rho0s))
        vbar = sum(w * v for w, v in zip(weights, vgrids))
        tilde = _master_single(rho0, vbar, lam, grid, cfg)
    else:
        tilde = sum(
            w * _master_single(r0, vg, lam, grid, cfg)
            for w, r0, vg in zip(weights, rho0s, vgrids)
        )
    states = np.einsum("ab,nbc,dc->nad", modes, tilde, modes.conj())
    return _finish(grid, states, "master")


def master_rhs(
    psi: GlobalState,
    sys: SystemModel,
    clock: ClockModel,
    params: QuasiIdealParams,
    g: CouplingG,
    tau: float,
    rho: np.ndarray,
    rho0: np.ndarray,
    cfg: IntegratorConfig,
    n_history: int = 64,
) -> np.ndarray:
    """Right-hand side of the master equation at one point, lab frame.

    Builds the potential history on a fresh uniform subdivision of
    [0, tau], so the derivative can be examined as a function of
    (rho, rho0) separately; the explicit rho0 argument is what makes
    the equation non-linear in the initial conditions.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    modes = sys.modes
    lam = clock.tick * sys.energies * (1.0 + g.g * sys.energies)
    gaps = lam[:, None] - lam[None, :]
    sub = np.linspace(0.0, tau, n_history + 1)
    vgrid = np.empty((len(sub), sys.dim_s, sys.dim_s), dtype=np.complex128)
    for i, s in enumerate(sub):
        if cfg.force_zero_potential:
            vgrid[i] = 0.0
        else:
            pot = build_potential(
                psi, sys, clock, params, float(s), g,
                hermitize=cfg.hermitize_potential,
            )
            vgrid[i] = modes.conj().T @ pot.matrix @ modes
    rt = modes.conj().T @ rho @ modes
    rt0 = modes.conj().T @ rho0 @ modes
    vu = vgrid[-1]
    out = -1j * (gaps * rt)
    if cfg.second_term == "exact-conjugation":
        back = np.exp(1j * gaps * tau) * rt0
        out += -1j * (vu @ back - back @ vu)
    else:
        c0 = gaps * rt0
        out += -1j * (vu @ rt0 - rt0 @ vu)
        out += tau * (vu @ c0 - c0 @ vu)
    dt = float(sub[1] - sub[0])
    mem = _memory_integral(vgrid, None, rt, gaps, dt, n_history, False)
    out -= vu @ mem - mem @ vu
    return modes @ out @ modes.conj().T


def integrate_ideal(
    sys: SystemModel,
    g: CouplingG,
    rho0: np.ndarray,
    grid: np.ndarray,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Ideal-clock limit: conjugation by exp(-i (H_S + g H_S^2) t), physical time."""
    rho0 = _check_density(rho0)
    g.check_regime(sys.energies)
    lam = sys.energies * (1.0 + g.g * sys.energies)
    if cfg.method == "closed-form":
        states = _conjugation_states(sys, lam, rho0, grid)
    else:
        hs = sys.hamiltonian
        mat = hs + g.g * (hs @ hs)
        states = np.stack(
            _rk4(lambda t, y: -1j * (mat @ y - y @ mat), rho0, grid)
        )
    return _finish(grid, states, "ideal")


def export_trajectory(traj: Trajectory, path: str) -> None:
    """Trajectory CSV: tau, row-major re/im state entries, diagnostics.

    17-significant-digit floats, LF endings; the oracle-norm column is
    left empty for integrator outputs.
    """
    dim_s = traj.states.shape[1]
    cols = ["tau"]
    for i in range(dim_s):
        for j in range(dim_s):
            cols += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
    cols += ["trace_defect", "herm_defect", "purity", "oracle_norm"]
    lines = [",".join(cols)]
    for i, tau in enumerate(traj.grid):
        row = [f"{tau:.17g}"]
        for a in range(dim_s):
            for b in range(dim_s):
                z = traj.states[i, a, b]
                row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
        row += [
            f"{traj.trace_defect[i]:.17g}",
            f"{traj.herm_defect[i]:.17g}",
            f"{traj.purity[i]:.17g}",
            "" if traj.oracle_norm is None else f"{traj.oracle_norm[i]:.17g}",
        ]
        lines.append(",".join(row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
