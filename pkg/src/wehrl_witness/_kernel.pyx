# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twisted-marginal kernel.

Mirrors :func:`wehrl_witness._kernel_py.twisted_marginal`; see that module
for the meaning of the arguments. Complex arithmetic is spelled out on
real/imaginary parts and the innermost loops run over output columns, so
the Horner recurrences of neighbouring columns are independent and the
compiler can vectorise them.
"""

import numpy as np
from libc.stdlib cimport malloc, free

cdef double INV_SQRT2 = 0.70710678118654752440
cdef double INV_2PI = 0.15915494309189533577


cdef void _poly_row(const double *cr, const double *ci, Py_ssize_t deg,
                    double zr, const double *zi, const double *g,
                    double *outr, double *outi, Py_ssize_t gb) noexcept nogil:
    """outr/outi[c] = g[c] * sum_m coef[m] * (zr + i zi[c])**m for all columns c."""
    cdef Py_ssize_t c, m
    cdef double hr, hi, tmp, cr_m, ci_m
    cr_m = cr[deg]
    ci_m = ci[deg]
    for c in range(gb):
        outr[c] = cr_m
        outi[c] = ci_m
    m = deg
    while m > 0:
        m -= 1
        cr_m = cr[m]
        ci_m = ci[m]
        for c in range(gb):
            hr = outr[c]
            hi = outi[c]
            tmp = hr * zr - hi * zi[c] + cr_m
            outi[c] = hr * zi[c] + hi * zr + ci_m
            outr[c] = tmp
    for c in range(gb):
        outr[c] *= g[c]
        outi[c] *= g[c]


def twisted_marginal(a_vals, b_vals, nodes, node_weights, coef1, deg1, coef2, deg2, core, pops):
    x = np.ascontiguousarray(nodes, dtype=np.float64)
    a = np.ascontiguousarray(a_vals, dtype=np.float64)
    b = np.ascontiguousarray(b_vals, dtype=np.float64)
    coef1 = np.asarray(coef1, dtype=np.complex128)
    coef2 = np.asarray(coef2, dtype=np.complex128)
    core = np.asarray(core, dtype=np.complex128)

    cdef Py_ssize_t ga = a.shape[0], gb = b.shape[0], n = x.shape[0]
    cdef Py_ssize_t r1 = coef1.shape[0], r2 = coef2.shape[0], nt = core.shape[0]

    cdef double[::1] xv = x
    cdef double[::1] av = a
    cdef double[:, ::1] e1 = np.ascontiguousarray(np.exp(-((a[:, None] / 2 + x) ** 2) / 4))
    cdef double[:, ::1] e2 = np.ascontiguousarray(np.exp(-((a[:, None] / 2 - x) ** 2) / 4))
    # column-major in the output index so rows over b are contiguous
    cdef double[:, ::1] f1 = np.ascontiguousarray(np.exp(-((b[None, :] / 2 + x[:, None]) ** 2) / 4))
    cdef double[:, ::1] f2 = np.ascontiguousarray(np.exp(-((x[:, None] - b[None, :] / 2) ** 2) / 4))
    cdef double[:, ::1] z1i = np.ascontiguousarray(-(b[None, :] / 2 + x[:, None]) * INV_SQRT2)
    cdef double[:, ::1] z2i = np.ascontiguousarray(-(x[:, None] - b[None, :] / 2) * INV_SQRT2)
    cdef double[::1] wx = np.ascontiguousarray(node_weights, dtype=np.float64)
    cdef double[:, ::1] c1r = np.ascontiguousarray(coef1.real)
    cdef double[:, ::1] c1i = np.ascontiguousarray(coef1.imag)
    cdef double[:, ::1] c2r = np.ascontiguousarray(coef2.real)
    cdef double[:, ::1] c2i = np.ascontiguousarray(coef2.imag)
    cdef double[:, :, ::1] kr = np.ascontiguousarray(core.real)
    cdef double[:, :, ::1] ki = np.ascontiguousarray(core.imag)
    cdef Py_ssize_t[::1] d1 = np.ascontiguousarray(deg1, dtype=np.intp)
    cdef Py_ssize_t[::1] d2 = np.ascontiguousarray(deg2, dtype=np.intp)
    cdef double[::1] pv = np.ascontiguousarray(pops, dtype=np.float64)

    out_arr = np.empty((ga, gb), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    # p1, p2: (r, gb) amplitude rows; g1, g2: envelopes; amp/inner/acc: scratch rows
    cdef Py_ssize_t nbuf = gb * (2 * r1 + 2 * r2 + 2 + 4 + 1)
    cdef double *buf = <double *> malloc(nbuf * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *p1r = buf
    cdef double *p1i = p1r + r1 * gb
    cdef double *p2r = p1i + r1 * gb
    cdef double *p2i = p2r + r2 * gb
    cdef double *g1 = p2i + r2 * gb
    cdef double *g2 = g1 + gb
    cdef double *ar = g2 + gb
    cdef double *ai = ar + gb
    cdef double *inr = ai + gb
    cdef double *ini = inr + gb
    cdef double *acc = ini + gb

    cdef Py_ssize_t ia, c, i, j, k, l, t
    cdef double ha, z1r, z2r, e1v, e2v, wij, kre, kim, pt
    try:
        with nogil:
            for ia in range(ga):
                ha = av[ia] * 0.5
                for c in range(gb):
                    acc[c] = 0.0
                for i in range(n):
                    z1r = (ha + xv[i]) * INV_SQRT2
                    z2r = (ha - xv[i]) * INV_SQRT2
                    e1v = e1[ia, i]
                    e2v = e2[ia, i]
                    for j in range(n):
                        wij = wx[i] * wx[j]
                        for c in range(gb):
                            g1[c] = e1v * f1[j, c]
                            g2[c] = e2v * f2[j, c]
                        for k in range(r1):
                            _poly_row(&c1r[k, 0], &c1i[k, 0], d1[k], z1r, &z1i[j, 0], g1,
                                      p1r + k * gb, p1i + k * gb, gb)
                        for l in range(r2):
                            _poly_row(&c2r[l, 0], &c2i[l, 0], d2[l], z2r, &z2i[j, 0], g2,
                                      p2r + l * gb, p2i + l * gb, gb)
                        for t in range(nt):
                            pt = pv[t] * wij
                            for c in range(gb):
                                ar[c] = 0.0
                                ai[c] = 0.0
                            for k in range(r1):
                                for c in range(gb):
                                    inr[c] = 0.0
                                    ini[c] = 0.0
                                for l in range(r2):
                                    kre = kr[t, k, l]
                                    kim = ki[t, k, l]
                                    for c in range(gb):
                                        inr[c] = inr[c] + kre * p2r[l * gb + c] - kim * p2i[l * gb + c]
                                        ini[c] = ini[c] + kre * p2i[l * gb + c] + kim * p2r[l * gb + c]
                                for c in range(gb):
                                    ar[c] = ar[c] + p1r[k * gb + c] * inr[c] - p1i[k * gb + c] * ini[c]
                                    ai[c] = ai[c] + p1r[k * gb + c] * ini[c] + p1i[k * gb + c] * inr[c]
                            for c in range(gb):
                                acc[c] = acc[c] + pt * (ar[c] * ar[c] + ai[c] * ai[c])
                for c in range(gb):
                    out[ia, c] = acc[c] * INV_2PI
    finally:
        free(buf)
    return out_arr
