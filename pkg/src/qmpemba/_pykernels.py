"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable, and as the reference the
compiled versions are tested against.  Every function here has an exact
counterpart in ``_ckernels.pyx`` with the same signature and semantics.
"""

import numpy as np


def sector_states(L, n_up):
    """All L-bit words with exactly ``n_up`` set bits, ascending."""
    words = np.arange(1 << L, dtype=np.int64)
    return words[np.bitwise_count(words) == n_up]


def hopping_elements(states, positions, J):
    """Off-diagonal XY matrix elements inside one charge sector.

    For every configuration ``states[k]`` and every bit pair ``p < q`` whose
    bits differ, the exchanged configuration receives amplitude
    ``2 J / |positions[p] - positions[q]|``.  Returns ``(rows, cols, vals)``
    with ``rows`` indexing the source configuration.
    """
    states = np.asarray(states, dtype=np.int64)
    positions = np.asarray(positions, dtype=np.int64)
    nbits = len(positions)
    rows, cols, vals = [], [], []
    idx = np.arange(len(states), dtype=np.int64)
    for p in range(nbits):
        bp = (states >> p) & 1
        for q in range(p + 1, nbits):
            bq = (states >> q) & 1
            mask = bp != bq
            if not mask.any():
                continue
            flipped = states[mask] ^ ((1 << p) | (1 << q))
            rows.append(idx[mask])
            cols.append(np.searchsorted(states, flipped))
            amp = 2.0 * J / abs(int(positions[p]) - int(positions[q]))
            vals.append(np.full(int(mask.sum()), amp))
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def deposit_bits(words, targets):
    """Scatter bit ``k`` of each word to bit position ``targets[k]``."""
    words = np.asarray(words, dtype=np.int64)
    out = np.zeros_like(words)
    for k, t in enumerate(targets):
        out |= ((words >> k) & 1) << int(t)
    return out


def extract_bits(words, sources):
    """Gather bit ``sources[k]`` of each word into bit position ``k``."""
    words = np.asarray(words, dtype=np.int64)
    out = np.zeros_like(words)
    for k, s in enumerate(sources):
        out |= ((words >> int(s)) & 1) << k
    return out


def embed_table(qos_words, qos_targets, bath_words, bath_targets):
    """Full-chain words for every (qos, bath) pair, shape (n_qos, n_bath)."""
    a = deposit_bits(qos_words, qos_targets)
    b = deposit_bits(bath_words, bath_targets)
    return a[:, None] | b[None, :]


def _rhs(diag, sub, psi):
    out = diag * psi
    out[1:] += sub * psi[:-1]
    out[:-1] -= sub * psi[1:]
    return out


def rk4_tridiagonal(diag, sub, psi0, times, max_step):
    """Integrate ``dpsi_n/dt = diag_n psi_n + sub_{n-1} psi_{n-1} - sub_n psi_{n+1}``.

    Classic fixed-step RK4.  Each interval between consecutive sample times
    is split into equal steps no longer than ``max_step``.  ``times`` must be
    nondecreasing and start at or after 0.
    """
    diag = np.asarray(diag, dtype=np.complex128)
    sub = np.asarray(sub, dtype=np.float64)
    psi = np.array(psi0, dtype=np.complex128)
    times = np.asarray(times, dtype=np.float64)
    out = np.empty((len(times), len(psi)), dtype=np.complex128)
    t_now = 0.0
    for i, t in enumerate(times):
        span = t - t_now
        if span > 0:
            n = int(np.ceil(span / max_step - 1e-12))
            h = span / n
            for _ in range(n):
                k1 = _rhs(diag, sub, psi)
                k2 = _rhs(diag, sub, psi + 0.5 * h * k1)
                k3 = _rhs(diag, sub, psi + 0.5 * h * k2)
                k4 = _rhs(diag, sub, psi + h * k3)
                psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t_now = t
        out[i] = psi
    return out
