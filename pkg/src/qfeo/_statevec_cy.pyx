# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled statevector kernels.

Same call surface as ``qfeo._statevec_np``: in-place gate application on a
flat complex128 amplitude array with qubit 0 as the least-significant bit
of the basis index.
"""


def apply_1q(double complex[::1] a, int q, double complex m00,
             double complex m01, double complex m10, double complex m11):
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t mask = (<Py_ssize_t>1) << q
    cdef Py_ssize_t step = mask << 1
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t i, j
    cdef double complex t0, t1
    with nogil:
        while base < size:
            i = base
            while i < base + mask:
                j = i + mask
                t0 = a[i]
                t1 = a[j]
                a[i] = m00 * t0 + m01 * t1
                a[j] = m10 * t0 + m11 * t1
                i += 1
            base += step


def apply_cx(double complex[::1] a, int qc, int qt):
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t mc = (<Py_ssize_t>1) << qc
    cdef Py_ssize_t mt = (<Py_ssize_t>1) << qt
    cdef Py_ssize_t mlo = mc if mc < mt else mt
    cdef Py_ssize_t mhi = mt if mc < mt else mc
    cdef Py_ssize_t hi = 0
    cdef Py_ssize_t mid, lo, i, j
    cdef double complex t
    with nogil:
        while hi < size:
            mid = hi
            while mid < hi + mhi:
                lo = mid
                while lo < mid + mlo:
                    i = lo | mc          # control set, target clear
                    j = i | mt           # control set, target set
                    t = a[i]
                    a[i] = a[j]
                    a[j] = t
                    lo += 1
                mid += mlo << 1
            hi += mhi << 1


def apply_2q_diag(double complex[::1] a, int qa, int qb, double complex d00,
                  double complex d01, double complex d10, double complex d11):
    """Diagonal two-qubit gate; d_{ij} multiplies the (bit qa=i, bit qb=j) block."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t ma = (<Py_ssize_t>1) << qa
    cdef Py_ssize_t mb = (<Py_ssize_t>1) << qb
    cdef Py_ssize_t mlo = ma if ma < mb else mb
    cdef Py_ssize_t mhi = mb if ma < mb else ma
    cdef Py_ssize_t hi = 0
    cdef Py_ssize_t mid, lo, i
    with nogil:
        while hi < size:
            mid = hi
            while mid < hi + mhi:
                lo = mid
                while lo < mid + mlo:
                    i = lo
                    a[i] = d00 * a[i]
                    a[i | mb] = d01 * a[i | mb]
                    a[i | ma] = d10 * a[i | ma]
                    a[i | ma | mb] = d11 * a[i | ma | mb]
                    lo += 1
                mid += mlo << 1
            hi += mhi << 1


def apply_2q_anti(double complex[::1] a, int qa, int qb, double complex c,
                  double complex u, double complex v):
    """Anti-diagonal coupling: mixes 00<->11 with off-diagonal ``u`` and
    01<->10 with ``v``; both subspaces share the diagonal factor ``c``.
    Covers RXX (u = v = -i sin) and RYY (u = +i sin, v = -i sin)."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t ma = (<Py_ssize_t>1) << qa
    cdef Py_ssize_t mb = (<Py_ssize_t>1) << qb
    cdef Py_ssize_t mlo = ma if ma < mb else mb
    cdef Py_ssize_t mhi = mb if ma < mb else ma
    cdef Py_ssize_t hi = 0
    cdef Py_ssize_t mid, lo, i00, i01, i10, i11
    cdef double complex t00, t01
    with nogil:
        while hi < size:
            mid = hi
            while mid < hi + mhi:
                lo = mid
                while lo < mid + mlo:
                    i00 = lo
                    i01 = lo | mb
                    i10 = lo | ma
                    i11 = lo | ma | mb
                    t00 = a[i00]
                    a[i00] = c * t00 + u * a[i11]
                    a[i11] = c * a[i11] + u * t00
                    t01 = a[i01]
                    a[i01] = c * t01 + v * a[i10]
                    a[i10] = c * a[i10] + v * t01
                    lo += 1
                mid += mlo << 1
            hi += mhi << 1


def z_expectation(double complex[::1] a, int q):
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t mask = (<Py_ssize_t>1) << q
    cdef Py_ssize_t step = mask << 1
    cdef Py_ssize_t base = 0
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    cdef double complex t
    with nogil:
        while base < size:
            i = base
            while i < base + mask:
                j = i + mask
                t = a[i]
                acc += t.real * t.real + t.imag * t.imag
                t = a[j]
                acc -= t.real * t.real + t.imag * t.imag
                i += 1
            base += step
    return acc
