"""Constrained clock+system states and relational conditioning.

The joint Hamiltonian couples a finite clock to a system through a
bilinear interaction controlled by a single dimensionless coupling.  Its
kernel (the states annihilated by it) carries the entire dynamical
content: conditioning such a global state on a clock reading recovers a
system trajectory without any external time parameter.

Layout convention: joint vectors are clock-major with the clock index in
the *time* basis, i.e. ``vector.reshape(d, dim_s)[k]`` is the system
component sitting next to clock time label k.  Operators returned by
:func:`total_hamiltonian` act on the energy-basis clock index instead
(the natural basis for spectra); :func:`kernel_states` converts its
eigenvectors accordingly.
"""

import json
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clockcore import ClockModel, QuasiIdealParams, energy_to_time, time_to_energy
from .kernels import window_amplitudes

__all__ = [
    "SystemModel",
    "CouplingG",
    "GlobalState",
    "Ensemble",
    "CouplingRegimeWarning",
    "total_hamiltonian",
    "kernel_states",
    "stationary_state",
    "commensurability",
    "history_state",
    "condition_time_basis",
    "condition_qic",
    "effective_convolution",
    "save_state",
    "load_state",
]


class CouplingRegimeWarning(UserWarning):
    """Coupling too large for the weak-field assumptions behind the dynamics."""


@dataclass(frozen=True)
class SystemModel:
    """System Hamiltonian with its eigendecomposition.

    ``modes`` holds eigenvectors as columns, ordered by ascending
    eigenvalue with lexicographic tie-breaking, so coherence measures
    have a reproducible basis even for degenerate spectra.
    """

    hamiltonian: np.ndarray
    energies: np.ndarray
    modes: np.ndarray

    def __post_init__(self):
        h = self.hamiltonian
        scale = max(1.0, float(np.abs(h).max()))
        if np.abs(h - h.conj().T).max() > 1e-12 * scale:
            raise ValueError("system hamiltonian is not Hermitian to 1e-12")
        rebuilt = self.modes @ np.diag(self.energies) @ self.modes.conj().T
        if np.abs(rebuilt - h).max() > 1e-10 * scale:
            raise ValueError("eigendecomposition does not reproduce the hamiltonian")

    @property
    def dim_s(self) -> int:
        return self.hamiltonian.shape[0]

    @classmethod
    def from_hamiltonian(cls, h: np.ndarray) -> "SystemModel":
        h = np.asarray(h, dtype=np.complex128)
        energies, modes = np.linalg.eigh(h)
        # canonical phase: make the largest-magnitude entry of each
        # eigenvector real positive, then break exact-degeneracy ties
        # lexicographically
        for i in range(modes.shape[1]):
            p = int(np.argmax(np.abs(modes[:, i])))
            ph = modes[p, i]
            if abs(ph) > 0:
                modes[:, i] *= np.conj(ph) / abs(ph)
        return cls(hamiltonian=h, energies=energies, modes=modes)

    @classmethod
    def from_energies(cls, energies: Sequence[float]) -> "SystemModel":
        e = np.asarray(energies, dtype=np.float64)
        n = e.size
        return cls(
            hamiltonian=np.diag(e).astype(np.complex128),
            energies=e,
            modes=np.eye(n, dtype=np.complex128),
        )


@dataclass(frozen=True)
class CouplingG:
    """Dimensionless clock-system coupling strength."""

    g: float

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"coupling must be nonnegative, got {self.g}")

    def check_regime(self, energies: np.ndarray) -> None:
        """Warn when g*max|E| leaves the weak-coupling regime."""
        scale = self.g * float(np.abs(energies).max()) if len(energies) else 0.0
        if scale >= 0.1:
            warnings.warn(
                f"g*max|E| = {scale:.3g} >= 0.1; the derived equations assume a "
                "perturbative coupling",
                CouplingRegimeWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class GlobalState:
    """Normalized joint state, clock-major flat vector, time-basis clock index."""

    d: int
    dim_s: int
    vector: np.ndarray
    label: str = "kernel-solver"

    def __post_init__(self):
        if self.vector.shape != (self.d * self.dim_s,):
            raise ValueError(
                f"vector length {self.vector.shape} does not match d*dim_s = "
                f"{self.d * self.dim_s}"
            )
        norm = np.linalg.norm(self.vector)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"global state norm {norm!r} is not 1 to 1e-12")

    @property
    def matrix(self) -> np.ndarray:
        """View with rows indexed by the clock time label."""
        return self.vector.reshape(self.d, self.dim_s)


@dataclass(frozen=True)
class Ensemble:
    """Convex mixture of global states sharing one (d, dim_s)."""

    members: Tuple[Tuple[float, GlobalState], ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        total = 0.0
        d, dim_s = self.members[0][1].d, self.members[0][1].dim_s
        for w, state in self.members:
            if w <= 0:
                raise ValueError(f"member weight must be positive, got {w}")
            if (state.d, state.dim_s) != (d, dim_s):
                raise ValueError("ensemble members must share (d, dim_s)")
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, expected 1")

    @classmethod
    def pure(cls, state: GlobalState) -> "Ensemble":
        return cls(members=((1.0, state),))


def total_hamiltonian(
    sys: SystemModel, clock: ClockModel, g: CouplingG
) -> np.ndarray:
    """Joint Hamiltonian matrix, clock index major and in the energy basis.

    The three terms (system, clock, bilinear coupling) commute pairwise,
    so the product eigenbasis diagonalizes the sum exactly and the
    spectrum is E_m + omega*j*(1 - g*E_m) over all index pairs.
    """
    g.check_regime(sys.energies)
    d = clock.d
    hc = np.diag(clock.omega * np.arange(d)).astype(np.complex128)
    eye_c = np.eye(d, dtype=np.complex128)
    eye_s = np.eye(sys.dim_s, dtype=np.complex128)
    return (
        np.kron(eye_c, sys.hamiltonian)
        + np.kron(hc, eye_s)
        - g.g * np.kron(hc, sys.hamiltonian)
    )


def kernel_states(
    h_total: np.ndarray, tol: float, clock: ClockModel, sys: SystemModel
) -> List[GlobalState]:
    """Orthonormal eigenvectors of the joint Hamiltonian with |eigenvalue| < tol.

    Sorted by |eigenvalue|; an empty list means no state met the
    tolerance (distinct from an eigensolver failure, which raises).
    The clock index of the returned states is converted to the time
    basis to match the stored layout.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    vals, vecs = np.linalg.eigh(h_total)
    hits = np.flatnonzero(np.abs(vals) < tol)
    hits = hits[np.argsort(np.abs(vals[hits]), kind="stable")]
    out = []
    for idx in hits:
        mat = vecs[:, idx].reshape(clock.d, sys.dim_s)
        mat = energy_to_time(clock, mat)
        out.append(
            GlobalState(
                d=clock.d,
                dim_s=sys.dim_s,
                vector=mat.reshape(-1),
                label="kernel-solver",
            )
        )
    return out


def constraint_residual(
    psi: GlobalState, h_total: np.ndarray, clock: ClockModel
) -> float:
    """Norm of the joint Hamiltonian applied to a stored state.

    Stored states keep the clock index in the time basis while the
    Hamiltonian matrix is energy-basis; the clock index is transformed
    before applying.
    """
    mat = time_to_energy(clock, psi.matrix)
    return float(np.linalg.norm(h_total @ mat.reshape(-1)))


def commensurability(
    sys: SystemModel, clock: ClockModel, g: CouplingG
) -> List[Tuple[int, float, bool]]:
    """Per-level report (m, p_m, integral) for the interacting kernel.

    Level m admits an exact kernel partner iff p_m = -E_m/(omega*(1-g*E_m))
    is an integer in [0, d-1] (within 1e-9).
    """
    out = []
    for m, e in enumerate(sys.energies):
        denom = clock.omega * (1.0 - g.g * e)
        p = -e / denom
        ok = abs(p - round(p)) <= 1e-9 and 0 <= round(p) <= clock.d - 1
        out.append((m, float(p), bool(ok)))
    return out


def stationary_state(
    sys: SystemModel, clock: ClockModel, g: CouplingG, m: int
) -> GlobalState:
    """Analytic kernel state pairing system eigenlevel m with one clock level.

    Unlike :func:`kernel_states` this fixes the member of a degenerate
    kernel exactly: the clock factor is the energy eigenstate p_m written
    in the time basis, so conditioning at time tau produces the pure
    phase exp(2i pi p_m tau / d) on that level.
    """
    report = commensurability(sys, clock, g)
    _, p, ok = report[m]
    if not ok:
        raise ValueError(
            f"level {m} is not commensurate: -E/(omega*(1-g*E)) = {p!r} "
            "must be an integer in [0, d-1]"
        )
    pj = int(round(p))
    d = clock.d
    k = np.arange(d)
    clock_part = np.exp(2j * np.pi * pj * k / d) / math.sqrt(d)
    mat = np.outer(clock_part, sys.modes[:, m])
    return GlobalState(d=d, dim_s=sys.dim_s, vector=mat.reshape(-1))


def history_state(
    sys: SystemModel, clock: ClockModel, psi0: np.ndarray
) -> GlobalState:
    """Uniform superposition of clock times paired with the evolved system.

    Row k is exp(-i H_S t_k) psi0 / sqrt(d) at the grid time t_k.  The
    spectrum must be commensurate with the clock spacing (each E/omega
    within 1e-9 of an integer); note that only non-positive integer
    ratios can actually be annihilated by the joint Hamiltonian, since
    clock levels are nonnegative.
    """
    psi0 = np.asarray(psi0, dtype=np.complex128)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-12:
        raise ValueError("psi0 must be normalized to 1e-12")
    ratios = sys.energies / clock.omega
    bad = [float(r) for r in ratios if abs(r - round(r)) > 1e-9]
    if bad:
        raise ValueError(
            f"incommensurate spectrum: E/omega values {bad} are not integers "
            "within 1e-9"
        )
    d = clock.d
    coeff = sys.modes.conj().T @ psi0
    t = clock.tick * np.arange(d)
    phases = np.exp(-1j * np.outer(t, sys.energies))
    mat = (phases * coeff) @ sys.modes.T / math.sqrt(d)
    return GlobalState(
        d=d, dim_s=sys.dim_s, vector=mat.reshape(-1), label="history-constructor"
    )


def condition_time_basis(psi: GlobalState, clock: ClockModel, k: int) -> np.ndarray:
    """System vector next to clock label k, rescaled by sqrt(d)."""
    if not 0 <= k <= clock.d - 1:
        raise ValueError(f"k must lie in [0, {clock.d - 1}], got {k}")
    return math.sqrt(clock.d) * psi.matrix[k].copy()


def condition_qic(
    psi: GlobalState,
    clock: ClockModel,
    params: QuasiIdealParams,
    tau: float,
) -> np.ndarray:
    """Unnormalized system state conditioned on the Gaussian clock at tau.

    Direct contraction of the clock index with the recentered Gaussian;
    equals the sqrt(d)-weighted average of the time-label conditionals
    taken with the conjugated amplitudes.
    """
    amps = window_amplitudes(clock.d, tau, params.sigma, params.j0)
    return amps.conj() @ psi.matrix


def effective_convolution(
    psi: GlobalState,
    clock: ClockModel,
    params: QuasiIdealParams,
    tau: float,
    n_quad: int,
    normalize_integrand: bool = False,
) -> np.ndarray:
    """Period-average of conditioned states weighted by the clock overlap.

    Trapezoid rule on n_quad uniform nodes over one period (grid scale);
    the integrand is periodic, so the wrap-around endpoint collapses the
    rule to equal weights.  ``normalize_integrand`` rescales each
    conditioned vector to unit norm before averaging.
    """
    d = clock.d
    if n_quad < 4 * d:
        raise ValueError(f"n_quad must be at least 4*d = {4 * d}, got {n_quad}")
    a_tau = window_amplitudes(d, tau, params.sigma, params.j0)
    h = d / n_quad
    acc = np.zeros(psi.dim_s, dtype=np.complex128)
    for i in range(n_quad):
        tp = i * h
        a_i = window_amplitudes(d, tp, params.sigma, params.j0)
        overlap = np.vdot(a_tau, a_i)
        vec = condition_qic(psi, clock, params, tp)
        if normalize_integrand:
            nv = np.linalg.norm(vec)
            if nv > 1e-300:
                vec = vec / nv
        acc += overlap * vec
    return acc * (h / d)


_FORMAT_TAG = "relclock-global-state"


def save_state(state: GlobalState, path: str) -> None:
    """Write a bit-exact text serialization (hex floats, interleaved re/im)."""
    flat = np.empty(2 * state.vector.size, dtype=np.float64)
    flat[0::2] = state.vector.real
    flat[1::2] = state.vector.imag
    doc = {
        "format": _FORMAT_TAG,
        "version": 1,
        "d": state.d,
        "dim_s": state.dim_s,
        "layout": "clock-major",
        "clock_basis": "time",
        "label": state.label,
        "amplitudes": [float(x).hex() for x in flat],
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_state(path: str) -> GlobalState:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT_TAG or doc.get("version") != 1:
        raise ValueError(f"not a recognized global-state document: {path}")
    if doc.get("layout") != "clock-major" or doc.get("clock_basis") != "time":
        raise ValueError("unsupported layout tags in global-state document")
    d, dim_s = int(doc["d"]), int(doc["dim_s"])
    raw = doc["amplitudes"]
    if len(raw) != 2 * d * dim_s:
        raise ValueError(
            f"amplitude count {len(raw)} does not match 2*d*dim_s = {2 * d * dim_s}"
        )
    flat = np.array([float.fromhex(x) for x in raw], dtype=np.float64)
    vector = flat[0::2] + 1j * flat[1::2]
    return GlobalState(d=d, dim_s=dim_s, vector=vector, label=str(doc["label"]))
