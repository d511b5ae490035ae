"""Relational dynamics with finite quantum clocks.

A simulator for a clock+system pair constrained to a stationary global
state: finite clock states with exponentially small timing errors, an
exact conditioning oracle for the relational trajectory, and fixed-step
integrators for each derived equation of motion, from the unitary
dilated evolution to the non-linear memory-kernel master equation.
"""

from .analysis import FitResult, convergence_ratio, decay_fit, distance, state_metrics
from .clockcore import (
    BoundParams,
    ClockModel,
    ErrorReport,
    QuasiIdealParams,
    QuasiIdealState,
    analytic_bound,
    clock_hamiltonian,
    commutator_error,
    energy_to_time,
    evolution_error,
    evolve_clock,
    generator_error,
    qic_derivative,
    qic_overlap,
    qic_shift,
    qic_state,
    time_operator,
    time_state,
    time_to_energy,
)
from .constraint import (
    CouplingG,
    CouplingRegimeWarning,
    Ensemble,
    GlobalState,
    SystemModel,
    commensurability,
    constraint_residual,
    condition_qic,
    condition_time_basis,
    effective_convolution,
    history_state,
    kernel_states,
    load_state,
    save_state,
    stationary_state,
    total_hamiltonian,
)
from .dynamics import (
    DilatedHamiltonian,
    IntegratorConfig,
    NormFloorError,
    Potential,
    Trajectory,
    build_potential,
    dilated_hamiltonian,
    export_trajectory,
    integrate_commutator,
    integrate_ideal,
    integrate_master,
    integrate_pure,
    master_rhs,
    oracle_trajectory,
    uniform_grid,
)
from .kernels import USING_COMPILED

__version__ = "0.1.0"
