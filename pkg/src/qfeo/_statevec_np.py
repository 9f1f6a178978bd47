"""Pure-numpy statevector kernels.

Fallback backend with the same call surface as the compiled module
``qfeo._statevec_cy``; selected at import time by :mod:`qfeo.statevec`
when the extension is unavailable. All kernels mutate the flat complex
amplitude array in place. Qubit 0 is the least-significant bit of the
basis index, which maps to the *last* axis of a ``[2]*n`` C-order reshape.
"""
import numpy as np


def _axis(n: int, q: int) -> int:
    return n - 1 - q


def _views(a: np.ndarray, q: int):
    """Return the (bit=0, bit=1) sub-views of ``a`` along qubit ``q``."""
    n = a.size.bit_length() - 1
    # trailing singleton axis keeps integer indexing from collapsing to scalars
    v = a.reshape([2] * n + [1])
    ax = _axis(n, q)
    idx0 = [slice(None)] * (n + 1)
    idx1 = [slice(None)] * (n + 1)
    idx0[ax] = 0
    idx1[ax] = 1
    return v[tuple(idx0)], v[tuple(idx1)]


def apply_1q(a, q, m00, m01, m10, m11):
    v0, v1 = _views(a, q)
    t0 = v0.copy()
    v0 *= m00
    v0 += m01 * v1
    v1 *= m11
    v1 += m10 * t0


def _pair_views(a: np.ndarray, qa: int, qb: int):
    """Sub-views indexed by (bit of qa, bit of qb)."""
    n = a.size.bit_length() - 1
    v = a.reshape([2] * n + [1])
    axa, axb = _axis(n, qa), _axis(n, qb)
    out = {}
    for ba in (0, 1):
        for bb in (0, 1):
            idx = [slice(None)] * (n + 1)
            idx[axa] = ba
            idx[axb] = bb
            out[(ba, bb)] = v[tuple(idx)]
    return out


def apply_cx(a, qc, qt):
    n = a.size.bit_length() - 1
    v = a.reshape([2] * n)
    axc, axt = _axis(n, qc), _axis(n, qt)
    idx = [slice(None)] * n
    idx[axc] = 1
    sub = v[tuple(idx)]
    # within the control=1 slice, swap the target axis
    tax = axt if axt < axc else axt - 1
    sub[...] = np.flip(sub, axis=tax)


def apply_2q_diag(a, qa, qb, d00, d01, d10, d11):
    """Diagonal two-qubit gate; d_{ij} multiplies the (bit qa=i, bit qb=j) block."""
    p = _pair_views(a, qa, qb)
    p[(0, 0)] *= d00
    p[(0, 1)] *= d01
    p[(1, 0)] *= d10
    p[(1, 1)] *= d11


def apply_2q_anti(a, qa, qb, c, u, v):
    """Anti-diagonal coupling: mixes 00<->11 with off-diagonal ``u`` and
    01<->10 with ``v``; both subspaces share the diagonal factor ``c``.
    Covers RXX (u = v = -i sin) and RYY (u = +i sin, v = -i sin)."""
    p = _pair_views(a, qa, qb)
    t00 = p[(0, 0)].copy()
    t01 = p[(0, 1)].copy()
    p[(0, 0)] *= c
    p[(0, 0)] += u * p[(1, 1)]
    p[(1, 1)] *= c
    p[(1, 1)] += u * t00
    p[(0, 1)] *= c
    p[(0, 1)] += v * p[(1, 0)]
    p[(1, 0)] *= c
    p[(1, 0)] += v * t01


def z_expectation(a, q) -> float:
    n = a.size.bit_length() - 1
    probs = (a.real * a.real + a.imag * a.imag).reshape([2] * n)
    ax = _axis(n, q)
    other = tuple(i for i in range(n) if i != ax)
    marg = probs.sum(axis=other)
    return float(marg[0] - marg[1])
