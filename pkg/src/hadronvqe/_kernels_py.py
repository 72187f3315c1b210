"""Pure numpy implementation of the statevector kernels (same API as the compiled module)."""

import numpy as np

G_RX, G_RY, G_RZ, G_X, G_H, G_SDG, G_CX = range(7)
_H = 1 / np.sqrt(2)


def _split(state, q):
    # view with axis 1 indexing the bit of qubit q
    return state.reshape(-1, 2, 1 << q)


def apply_gates(state, kinds, targets, controls, angles):
    """Apply a gate list to ``state`` in place."""
    dim = state.shape[0]
    for k, t, c, th in zip(kinds, targets, controls, angles):
        v = _split(state, t)
        a, b = v[:, 0, :].copy(), v[:, 1, :]
        if k == G_RX:
            co, si = np.cos(th / 2), np.sin(th / 2)
            v[:, 0, :] = co * a - 1j * si * b
            v[:, 1, :] = -1j * si * a + co * b
        elif k == G_RY:
            co, si = np.cos(th / 2), np.sin(th / 2)
            v[:, 0, :] = co * a - si * b
            v[:, 1, :] = si * a + co * b
        elif k == G_RZ:
            ph = np.exp(-0.5j * th)
            v[:, 0, :] *= ph
            v[:, 1, :] *= ph.conjugate()
        elif k == G_X:
            v[:, 0, :] = b
            v[:, 1, :] = a
        elif k == G_H:
            v[:, 0, :] = _H * (a + b)
            v[:, 1, :] = _H * (a - b)
        elif k == G_SDG:
            v[:, 1, :] *= -1j
        elif k == G_CX:
            idx = np.arange(dim)
            sel = idx[((idx >> c) & 1 == 1) & ((idx >> t) & 1 == 0)]
            partner = sel | (1 << t)
            state[sel], state[partner] = state[partner].copy(), state[sel].copy()
        else:
            raise ValueError(f"unknown gate code {k}")


def pauli_expectations(state, xs, zs, nys):
    """Real parts of <psi|P|psi> for each symplectic Pauli string (x, z, n_y)."""
    idx = np.arange(state.shape[0], dtype=np.int64)
    out = np.empty(len(xs))
    phases = np.array([1, 1j, -1, -1j])
    for t, (x, z, ny) in enumerate(zip(xs, zs, nys)):
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & z).astype(np.int64) & 1)
        acc = np.vdot(state[idx ^ x], signs * state)
        out[t] = (phases[ny & 3] * acc).real
    return out
