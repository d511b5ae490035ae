"""Reference implementations of the numerical hot spots.

Everything here is plain numpy and must stay drop-in compatible with the
compiled versions in ``_ckernels``; the test suite diffs the two backends.
"""

import numpy as np


def window_bounds(d, k0):
    """First label of the d consecutive integers centered about k0.

    Ties at half-integers round up: the window is
    {ceil(k0) - d//2, ..., ceil(k0) + (d - d//2) - 1}.
    """
    return int(np.ceil(k0)) - d // 2


def window_amplitudes(d, k0, sigma, j0):
    """Normalized Gaussian amplitudes over the moving window, folded mod d.

    Returns a complex vector indexed by the time-basis label k in 0..d-1.
    The amplitude on window member k is
    A * exp(-pi (k-k0)^2 / sigma^2) * exp(2i pi j0 (k-k0) / d)
    with A fixed by unit norm over the window.
    """
    lo = window_bounds(d, k0)
    ks = np.arange(lo, lo + d, dtype=np.float64)
    x = ks - k0
    envelope = np.exp(-np.pi * x * x / (sigma * sigma))
    norm = np.sqrt(np.sum(envelope * envelope))
    vals = (envelope / norm) * np.exp(2j * np.pi * j0 * x / d)
    out = np.zeros(d, dtype=np.complex128)
    out[np.arange(lo, lo + d) % d] = vals
    return out


def window_derivative(d, k0, sigma, j0):
    """d/dk0 of window_amplitudes with the norm and window held fixed."""
    lo = window_bounds(d, k0)
    ks = np.arange(lo, lo + d, dtype=np.float64)
    x = ks - k0
    envelope = np.exp(-np.pi * x * x / (sigma * sigma))
    norm = np.sqrt(np.sum(envelope * envelope))
    vals = (envelope / norm) * np.exp(2j * np.pi * j0 * x / d)
    factor = 2.0 * np.pi * x / (sigma * sigma) - 2j * np.pi * j0 / d
    out = np.zeros(d, dtype=np.complex128)
    out[np.arange(lo, lo + d) % d] = vals * factor
    return out


def memory_accumulate(kernels, gaps, us, weights):
    """Weighted phase-conjugated sum of stored commutator kernels.

    kernels: (n, m, m) complex stack, one entry per past grid node.
    gaps: (m, m) real matrix of eigenvalue differences lam_a - lam_b.
    us: (n,) elapsed times tau - s_i.
    weights: (n,) quadrature weights.

    Returns sum_i weights[i] * exp(-1j * gaps * us[i]) * kernels[i].
    """
    out = np.zeros_like(kernels[0])
    for i in range(kernels.shape[0]):
        out += weights[i] * np.exp(-1j * gaps * us[i]) * kernels[i]
    return out
