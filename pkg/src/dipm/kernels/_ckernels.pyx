# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the pseudo-spectral tendency and the Lawson RK4 update.

Every routine fuses what numpy would do in several passes with temporaries.
Complex arrays arrive as interleaved float64 views (``re, im, re, im, ...``).
The arithmetic order mirrors ``_fallback.py`` so both backends agree to the
last bit when compiled without FMA contraction.
"""


def velocity_gradient_spectra(const double[:, ::1] rho_hat, const double[::1] k1,
                              const double[::1] k2, const double[:, ::1] inv_k2,
                              const unsigned char[:, ::1] mask,
                              double[:, ::1] u1h, double[:, ::1] u2h,
                              double[:, ::1] d1h, double[:, ::1] d2h):
    cdef Py_ssize_t i, j, jr, ji
    cdef Py_ssize_t n1 = inv_k2.shape[0], m2 = inv_k2.shape[1]
    cdef double a, b, p, q, s1, s2
    with nogil:
        for i in range(n1):
            p = k1[i]
            for j in range(m2):
                jr = 2 * j
                ji = jr + 1
                if not mask[i, j]:
                    u1h[i, jr] = 0.0
                    u1h[i, ji] = 0.0
                    u2h[i, jr] = 0.0
                    u2h[i, ji] = 0.0
                    d1h[i, jr] = 0.0
                    d1h[i, ji] = 0.0
                    d2h[i, jr] = 0.0
                    d2h[i, ji] = 0.0
                    continue
                a = rho_hat[i, jr]
                b = rho_hat[i, ji]
                q = k2[j]
                s1 = (p * q) * inv_k2[i, j]
                s2 = -(p * p) * inv_k2[i, j]
                u1h[i, jr] = a * s1
                u1h[i, ji] = b * s1
                u2h[i, jr] = a * s2
                u2h[i, ji] = b * s2
                d1h[i, jr] = -(b * p)
                d1h[i, ji] = a * p
                d2h[i, jr] = -(b * q)
                d2h[i, ji] = a * q


def advect(const double[:, ::1] u1, const double[:, ::1] u2,
           const double[:, ::1] d1, const double[:, ::1] d2,
           const double[::1] dr0, double[:, ::1] out):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n1 = u1.shape[0], n2 = u1.shape[1]
    cdef double t, m, umax2 = 0.0
    with nogil:
        for i in range(n1):
            for j in range(n2):
                t = (d2[i, j] + dr0[j]) * u2[i, j]
                t = t + u1[i, j] * d1[i, j]
                out[i, j] = -t
                m = u1[i, j] * u1[i, j] + u2[i, j] * u2[i, j]
                if m > umax2:
                    umax2 = m
    return umax2


def lawson_stage(const double[::1] A, const double[::1] y, double c,
                 const double[::1] B, const double[::1] k, double[::1] out):
    cdef Py_ssize_t i, r, n = A.shape[0]
    cdef double t
    with nogil:
        for i in range(n):
            for r in range(2 * i, 2 * i + 2):
                t = k[r] * B[i]
                t = t * c
                out[r] = y[r] * A[i] + t


def lawson_final(const double[::1] E, const double[::1] Eh, const double[::1] y,
                 double h, const double[::1] k1, const double[::1] k2,
                 const double[::1] k3, const double[::1] k4, double[::1] out):
    cdef Py_ssize_t i, r, n = E.shape[0]
    cdef double c = h / 6.0
    cdef double t, o
    with nogil:
        for i in range(n):
            for r in range(2 * i, 2 * i + 2):
                t = k2[r] + k3[r]
                t = t * Eh[i]
                t = t * 2.0
                t = t + k4[r]
                t = t * c
                o = k1[r] * c + y[r]
                o = o * E[i]
                out[r] = o + t
