# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sin, cos, fabs, M_PI

cnp.import_array()


def bohr_mask(double[::1] freqs, double rho_eff, long N):
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] mask = np.ones(N, dtype=np.uint8)
    cdef long n
    cdef Py_ssize_t k
    cdef double v, frac, dist
    for n in range(1, N + 1):
        for k in range(freqs.shape[0]):
            v = freqs[k] * n
            frac = v - floor(v)
            dist = frac if frac < 1.0 - frac else 1.0 - frac
            if not dist < rho_eff:
                mask[n - 1] = 0
                break
    return mask.astype(bool)


def sinc_train(x_in, shifts_in, centers_in, double w, int power, double radius):
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64).ravel()
    order = np.argsort(shifts_in)
    cdef double[::1] s = np.ascontiguousarray(np.asarray(shifts_in, dtype=np.float64)[order])
    cdef double[::1] c = np.ascontiguousarray(np.asarray(centers_in, dtype=np.float64)[order])
    out = np.zeros(x.shape[0], dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t i, j, lo, hi, mid, P = s.shape[0]
    cdef double xi, u, env, base, ph
    cdef int p
    for i in range(x.shape[0]):
        xi = x[i]
        lo = 0
        hi = P
        while lo < hi:
            mid = (lo + hi) // 2
            if s[mid] < xi - radius:
                lo = mid + 1
            else:
                hi = mid
        j = lo
        while j < P and s[j] <= xi + radius:
            u = w * (xi - s[j])
            if fabs(u) < 1e-300:
                base = 1.0
            else:
                base = sin(M_PI * u) / (M_PI * u)
            env = 1.0
            for p in range(power):
                env *= base
            ph = 2.0 * M_PI * c[j] * xi
            o[i] = o[i] + env * (cos(ph) + 1j * sin(ph))
            j += 1
    return out.reshape(np.shape(x_in))
