"""Pure-numpy reference implementations of the hot kernels.

The compiled twin lives in ``_kernels.pyx`` and must return identical
results for identical inputs; ``decoyforge.kernels`` picks one at import.

Detector indexing used throughout: 0 = c/H, 1 = c/V, 2 = d/H, 3 = d/V.  A
"lit mask" is the 4-bit set of detectors that received at least one photon.
"""

from __future__ import annotations

from functools import lru_cache
from math import lgamma

import numpy as np

SUCCESS_MASKS = (3, 12, 9, 6)  # {cH,cV}, {dH,dV}, {cH,dV}, {cV,dH}


@lru_cache(maxsize=None)
def _grid(dim: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.indices((dim,) * 4).reshape(4, -1)
    log_fact = np.vectorize(lambda n: lgamma(n + 1.0))(idx).sum(axis=0)
    mask = ((idx > 0) * (1 << np.arange(4))[:, None]).sum(axis=0)
    return log_fact, mask


def fock_lit_distribution(j: int, k: int, ca, cb) -> np.ndarray:
    """Distribution of lit-detector masks for ``j`` photons in mode ``ca`` and ``k`` in ``cb``.

    ``ca`` and ``cb`` are the length-4 complex expansions of the two input
    creation operators over the output modes.  The input Fock state
    ``(a^+)^j (b^+)^k |0> / sqrt(j! k!)`` is expanded as a polynomial in the
    output creation operators; the squared amplitudes give the photon-number
    pattern probabilities, which are binned by support.
    """
    n = j + k
    out = np.zeros(16)
    if n == 0:
        out[0] = 1.0
        return out
    ca = np.asarray(ca, dtype=complex)
    cb = np.asarray(cb, dtype=complex)
    dim = n + 1
    poly = np.zeros((dim,) * 4, dtype=complex)
    poly[0, 0, 0, 0] = 1.0
    for step in range(n):
        c = ca if step < j else cb
        new = np.zeros_like(poly)
        new[1:, :, :, :] += c[0] * poly[:-1, :, :, :]
        new[:, 1:, :, :] += c[1] * poly[:, :-1, :, :]
        new[:, :, 1:, :] += c[2] * poly[:, :, :-1, :]
        new[:, :, :, 1:] += c[3] * poly[:, :, :, :-1]
        poly = new
    log_fact, mask = _grid(dim)
    weight = np.exp(log_fact - lgamma(j + 1.0) - lgamma(k + 1.0))
    probs = np.abs(poly.ravel()) ** 2 * weight
    return np.bincount(mask, weights=probs, minlength=16)


def bb84_trials(arrived, u_dark, u_err, p_d: float, e_d: float, e_0: float) -> tuple[int, int]:
    """Count detection events and errors for a batch of BB84 pulses.

    A pulse clicks if any photon arrives (error with probability ``e_d``) or,
    failing that, on a dark count (error with probability ``e_0``).
    """
    arrived = np.asarray(arrived)
    u_dark = np.asarray(u_dark)
    u_err = np.asarray(u_err)
    photon = arrived > 0
    dark = ~photon & (u_dark < p_d)
    errors = (photon & (u_err < e_d)) | (dark & (u_err < e_0))
    return int(np.count_nonzero(photon | dark)), int(np.count_nonzero(errors))


def mdi_z_single_trials(u, eta_s: float, e_d: float, p_d: float) -> tuple[int, int]:
    """Particle-picture relay simulation for one Z-basis photon per side.

    Columns of ``u`` (uniforms): bit A, bit B, flip A, flip B, arrive A,
    arrive B, port A, port B, then one dark-count draw per detector.
    Identical polarizations bunch into one output port (Hong-Ou-Mandel);
    orthogonal ones route independently.
    """
    u = np.asarray(u)
    bit_a = u[:, 0] < 0.5
    bit_b = u[:, 1] < 0.5
    pol_a = (bit_a ^ (u[:, 2] < e_d)).astype(np.int64)
    pol_b = (bit_b ^ (u[:, 3] < e_d)).astype(np.int64)
    arr_a = u[:, 4] < eta_s
    arr_b = u[:, 5] < eta_s
    port_a = (u[:, 6] < 0.5).astype(np.int64)
    port_b = (u[:, 7] < 0.5).astype(np.int64)
    bunch = arr_a & arr_b & (pol_a == pol_b)
    port_b = np.where(bunch, port_a, port_b)
    mask = np.where(arr_a, 1 << (2 * port_a + pol_a), 0) | np.where(arr_b, 1 << (2 * port_b + pol_b), 0)
    for d in range(4):
        mask = mask | np.where(u[:, 8 + d] < p_d, 1 << d, 0)
    success = np.isin(mask, SUCCESS_MASKS)
    errors = success & (bit_a == bit_b)
    return int(np.count_nonzero(success)), int(np.count_nonzero(errors))
