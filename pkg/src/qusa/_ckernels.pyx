# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels; same contract as qusa._pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, fabs, sqrt

cnp.import_array()

DEF MAX_TERMS = 60
cdef double TAYLOR_TOL = 2.0 ** -53


cdef inline void _axpy(double cr, double ci, const double* x, double* y, Py_ssize_t m) noexcept nogil:
    """y += c * x over m interleaved complex values."""
    cdef Py_ssize_t k
    cdef double xr, xi
    for k in range(m):
        xr = x[2 * k]
        xi = x[2 * k + 1]
        y[2 * k] += cr * xr - ci * xi
        y[2 * k + 1] += cr * xi + ci * xr


cdef void _apply(const double complex[::1] psi,
                 const double complex[::1] diag,
                 const double complex[:, :, ::1] local,
                 int triode_count,
                 double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t i, j, t, outer, inner, stride, block, src, dst, base
    cdef int d
    cdef double complex c, acc
    cdef double complex L[16]
    for i in range(n):
        out[i] = diag[i] * psi[i]
    if local.shape[0] == 0:
        return
    d = <int>local.shape[1]
    stride = n
    for t in range(local.shape[0]):
        block = stride
        stride = block // d
        for i in range(d):
            for j in range(d):
                L[i * d + j] = local[t, i, j]
        outer = 0
        if stride >= 8:
            # long contiguous runs: stream each block entry over them
            while outer < n:
                for i in range(d):
                    dst = outer + i * stride
                    for j in range(d):
                        c = L[i * d + j]
                        if c.real == 0 and c.imag == 0:
                            continue
                        _axpy(c.real, c.imag, <const double*>&psi[outer + j * stride],
                              <double*>&out[dst], stride)
                outer += block
        else:
            while outer < n:
                for inner in range(stride):
                    base = outer + inner
                    for i in range(d):
                        acc = 0
                        for j in range(d):
                            acc = acc + L[i * d + j] * psi[base + j * stride]
                        out[base + i * stride] = out[base + i * stride] + acc
                outer += block


cdef double _norm(const double complex[::1] v) noexcept nogil:
    cdef double s = 0
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        s += v[i].real * v[i].real + v[i].imag * v[i].imag
    return sqrt(s)


def apply_generator(psi, diag, local, int triode_count):
    cdef const double complex[::1] p = np.ascontiguousarray(psi, dtype=np.complex128)
    cdef const double complex[::1] dg = np.ascontiguousarray(diag, dtype=np.complex128)
    cdef const double complex[:, :, ::1] loc = np.ascontiguousarray(local, dtype=np.complex128)
    out = np.empty(p.shape[0], dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        _apply(p, dg, loc, triode_count, o)
    return out


def propagate(psi, diag, local, int triode_count, double dt, double norm_bound):
    cdef const double complex[::1] dg = np.ascontiguousarray(diag, dtype=np.complex128)
    cdef const double complex[:, :, ::1] loc = np.ascontiguousarray(local, dtype=np.complex128)
    out = np.array(psi, dtype=np.complex128, copy=True)
    cdef double complex[::1] o = out
    cdef Py_ssize_t n = o.shape[0]
    term_a = np.empty(n, dtype=np.complex128)
    term_b = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] ta = term_a
    cdef double complex[::1] tb = term_b
    cdef double complex[::1] tmp
    cdef int nsub = <int>ceil(norm_bound * fabs(dt))
    if nsub < 1:
        nsub = 1
    cdef double h = dt / nsub
    cdef double complex coef
    cdef int s, k, small
    cdef Py_ssize_t i
    with nogil:
        for s in range(nsub):
            for i in range(n):
                ta[i] = o[i]
            small = 0
            for k in range(1, MAX_TERMS):
                _apply(ta, dg, loc, triode_count, tb)
                coef = -1j * h / k
                for i in range(n):
                    tb[i] = tb[i] * coef
                    o[i] = o[i] + tb[i]
                if _norm(tb) <= TAYLOR_TOL * _norm(o):
                    small += 1
                    if small == 2:
                        break
                else:
                    small = 0
                tmp = ta
                ta = tb
                tb = tmp
    return out
