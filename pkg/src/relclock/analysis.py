"""Metrics, distances, and scaling fits used by the benchmark suite."""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .constraint import SystemModel

__all__ = [
    "FitResult",
    "state_metrics",
    "distance",
    "decay_fit",
    "convergence_ratio",
]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def __post_init__(self):
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError(f"r_squared out of range: {self.r_squared}")
        if self.n_points < 2:
            raise ValueError("fit needs at least two points")


def state_metrics(
    rho: np.ndarray, sys: Optional[SystemModel] = None
) -> Dict[str, float]:
    """Purity and l1 coherence of a density matrix.

    Coherence is measured in the system eigenbasis; pass ``sys`` to
    rotate, or leave it out when rho is already expressed there.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    defect = float(np.linalg.norm(rho - rho.conj().T))
    if defect > 1e-6:
        raise ValueError(f"hermiticity defect {defect:.3e} exceeds 1e-6")
    if sys is not None:
        rho = sys.modes.conj().T @ rho @ sys.modes
    off = rho - np.diag(np.diag(rho))
    return {
        "purity": float(np.real(np.trace(rho @ rho))),
        "l1_coherence": float(np.abs(off).sum()),
    }


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def distance(rho1: np.ndarray, rho2: np.ndarray) -> Dict[str, float]:
    """Trace distance and (squared-form) fidelity of two density matrices."""
    rho1 = np.asarray(rho1, dtype=np.complex128)
    rho2 = np.asarray(rho2, dtype=np.complex128)
    if rho1.shape != rho2.shape:
        raise ValueError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    diff_vals = np.linalg.eigvalsh((rho1 - rho2 + (rho1 - rho2).conj().T) / 2)
    s1 = _psd_sqrt(rho1)
    fid = float(np.real(np.trace(_psd_sqrt(s1 @ rho2 @ s1)))) ** 2
    return {
        "trace_distance": float(0.5 * np.abs(diff_vals).sum()),
        "fidelity": min(max(fid, 0.0), 1.0),
    }


def decay_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Least-squares line through (xs, log ys); slope is the decay rate."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 3:
        raise ValueError("decay fit needs at least three points")
    if np.any(ys <= 0):
        raise ValueError("ys must be strictly positive for a log fit")
    logy = np.log(ys)
    slope, intercept = np.polyfit(xs, logy, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    # a constant series is fit exactly by the zero-slope line
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - ss_res / ss_tot
    return FitResult(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=min(max(r2, 0.0), 1.0),
        n_points=int(xs.size),
    )


def convergence_ratio(err_big: float, err_small: float) -> float:
    if err_big <= 0 or err_small <= 0:
        raise ValueError("convergence ratio needs two positive errors")
    return err_big / err_small
