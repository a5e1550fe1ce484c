# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled chunk integrator; mirrors ``model.step`` for one trajectory.

The state arrays are updated in place.  ``normals`` has shape
(m, nnoise, nz) and may be empty (shape (0, 0, 0)) for noise-free runs.
"""

from libc.math cimport sqrt, isfinite
cimport cython

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

DEF NV = 8
DEF NA = 18

cdef double SQ2 = sqrt(2.0)


cdef inline void full_row_sum(double complex* s, double complex fa, double complex fb,
                                  double ec, double gamma0, double gammac, double gbar,
                                  double* w, double complex* out) noexcept nogil:
    """out[i] = sum_j B[i, j] w[j] with B the full 18-noise map."""
    cdef double complex B[NV][NA]
    cdef int i, j
    cdef double complex s3 = s[0], s4 = s[1], s5 = s[2], s6 = s[3]
    cdef double complex s7 = s[4], s9 = s[5], s10 = s[6], s11 = s[7]
    cdef double r = sqrt(0.5 * gbar)
    cdef double gm = gammac + 0.5 * gamma0
    cdef double complex p33 = 1.0 - s6 - s7
    cdef double complex q = fa * s11 + fb * s3 + p33
    cdef double complex pop = s6 + s7
    cdef double complex I = 1j
    cdef double complex c
    cdef double complex sqq
    for i in range(NV):
        for j in range(NA):
            B[i][j] = 0.0
    # sigma3
    B[0][0] += r * (fa / gbar - s3)
    B[0][1] += I * r * (fa / gbar + s3)
    c = -(fa * s4 + ec * s3)
    B[0][2] += c
    B[0][3] += -I * c
    c = 0.5 * csqrt(gm * p33 + 0j)
    B[0][6] += I * c
    B[0][9] += SQ2 * c
    B[0][11] += I * c
    c = SQ2 * gm * s4
    B[0][13] += c
    B[0][12] += -I * c
    # sigma4
    B[1][0] += r * (s4 - ec / gbar)
    B[1][1] += -I * r * (s4 + ec / gbar)
    B[1][2] += 1.0
    B[1][3] += I
    c = 0.25 * gm * p33
    B[1][14] += I * c
    B[1][15] += c
    # sigma5
    B[2][0] += -r * s5
    B[2][1] += I * r * s5
    c = 0.5 * (fa * (s6 - s7) + gm * s3)
    B[2][2] += c
    B[2][3] += -I * c
    B[2][4] += 1.0 / (2.0 * SQ2)
    B[2][5] += -I / (2.0 * SQ2)
    c = 0.5 * csqrt(q + 2.0 * gamma0 * s7 + gammac * pop + 0j)
    B[2][7] += I * c
    B[2][8] += SQ2 * c
    B[2][10] += I * c
    # sigma6
    sqq = csqrt(q + 0j)
    c = -gammac / sqrt(2.0 * gbar)
    B[3][0] += c
    B[3][1] += I * c
    c = -0.5 * fa * s9
    B[3][2] += c
    B[3][3] += -I * c
    c = sqq * csqrt(q + gammac * pop + 0j)
    B[3][4] += c
    B[3][5] += I * c
    c = csqrt(0.5 * gammac * pop + 0j)
    B[3][6] += c
    B[3][11] += -c
    B[3][8] += -sqq
    c = sqq * csqrt(q + gammac * pop + gamma0 * s7 + 0j)
    B[3][13] += c
    B[3][12] += -I * c
    c = -0.5 * fb * s5
    B[3][14] += I * c
    B[3][15] += c
    B[3][17] += -gammac
    B[3][16] += I * gammac
    # sigma7
    c = gammac / sqrt(2.0 * gbar)
    B[4][0] += c
    B[4][1] += I * c
    c = 0.5 * fa * s9
    B[4][2] += c
    B[4][3] += -I * c
    c = SQ2 * (fa * s10 + ec * s3)
    B[4][4] += c
    B[4][5] += I * c
    c = csqrt(0.5 * gammac * pop + 0j)
    B[4][11] += c
    B[4][6] += -c
    c = csqrt(ec * (s4 + s10) + p33 + 0j) / SQ2
    B[4][7] += c
    B[4][10] += -c
    c = SQ2 * (fb * s4 + ec * s11)
    B[4][13] += c
    B[4][12] += -I * c
    c = 0.5 * fb * s5
    B[4][15] += c
    B[4][14] += I * c
    c = gammac / sqrt(2.0 * gbar)
    B[4][17] += c
    B[4][16] += -I * c
    # sigma9
    c = 0.5 * csqrt(q + gammac * pop + gamma0 * s7 + 0j)
    B[5][7] += -I * c
    B[5][8] += SQ2 * c
    B[5][10] += -I * c
    B[5][13] += 1.0 / (2.0 * SQ2)
    B[5][12] += I / (2.0 * SQ2)
    c = 0.5 * (fb * (s6 - s7) + gm * s11)
    B[5][14] += I * c
    B[5][15] += c
    B[5][16] += -I * r * s9
    B[5][17] += -r * s9
    # sigma10
    c = 0.25 * gm * p33
    B[6][2] += c
    B[6][3] += -I * c
    B[6][15] += 1.0
    B[6][14] += -I
    B[6][16] += I * r * (s10 + ec / gbar)
    B[6][17] += r * (s10 - ec / gbar)
    # sigma11
    c = SQ2 * gm * s10
    B[7][4] += c
    B[7][5] += I * c
    c = 0.5 * csqrt(gm * p33 + 0j)
    B[7][6] += -I * c
    B[7][9] += SQ2 * c
    B[7][11] += -I * c
    c = -(fb * s10 + ec * s11)
    B[7][14] += I * c
    B[7][15] += c
    B[7][16] += -I * r * (fb / gbar + s11)
    B[7][17] += r * (fb / gbar - s11)
    for i in range(NV):
        c = 0.0
        for j in range(NA):
            c = c + B[i][j] * w[j]
        out[i] = c


def advance(double complex[:, ::1] s, double complex[::1] a, double complex[::1] b,
            double complex[::1] a0, double complex[::1] b0, double[::1] ec,
            double[:, :, ::1] normals, Py_ssize_t[::1] probes,
            double complex[:, :, ::1] out,
            double dt, double h, double gamma0, double gammac, double gbar,
            double noise_scale, int noise_model, double[::1] theta, double guard):
    """Advance one trajectory by len(ec) steps.

    noise_model: 0 none, 1 full (18 noises), 2 langevin (4 noises).
    theta: implicitness of the core update for each step.
    out[n, 0/1, p] receives a/b at boundary probes[p] after step n.
    Returns True if the trajectory left the guard region.
    """
    cdef Py_ssize_t nz = s.shape[1]
    cdef Py_ssize_t m = ec.shape[0]
    cdef Py_ssize_t nprobe = probes.shape[0]
    cdef Py_ssize_t n, k, p, j
    cdef double big = 1.0 + 0.5 * gamma0 + 0.5 * gammac
    cdef double gd = gamma0 + gammac
    cdef double td, om
    cdef double e
    cdef double complex s3, s4, s5, s6, s7, s9, s10, s11, p33, delta
    cdef double complex fa, fb, a_prev_old, b_prev_old, a_next_old, b_next_old
    cdef double complex ak, bk
    cdef double complex r3, r5, r9, r11, u, v, m11, det, inv, x3, x5, x9, x11
    cdef double dn
    cdef double complex c13, c12, r13, r12
    cdef double complex nz_[NV]
    cdef double complex st[NV]
    cdef double w[NA]
    cdef double m12, m21, m22, amax, gmax
    cdef bint noisy = noise_model != 0 and normals.shape[0] > 0
    cdef bint bad = False
    with nogil:
        for n in range(m):
            e = ec[n]
            td = theta[n] * dt
            om = 1.0 - theta[n]
            m12 = -td * e
            m21 = td * e
            m22 = 1.0 + td * gd
            a_prev_old = a[0]
            b_prev_old = b[0]
            a[0] = a0[n]
            b[0] = b0[n]
            ak = a[0]
            bk = b[0]
            for k in range(nz):
                a_next_old = a[k + 1]
                b_next_old = b[k + 1]
                fa = 0.5 * (a_prev_old + a_next_old)
                fb = 0.5 * (b_prev_old + b_next_old)
                s3 = s[0, k]; s4 = s[1, k]; s5 = s[2, k]; s6 = s[3, k]
                s7 = s[4, k]; s9 = s[5, k]; s10 = s[6, k]; s11 = s[7, k]
                for j in range(NV):
                    nz_[j] = 0.0
                if noisy:
                    if noise_model == 1:
                        for j in range(NA):
                            w[j] = normals[n, j, k]
                        for j in range(NV):
                            st[j] = s[j, k]
                        full_row_sum(st, fa, fb, e, gamma0, gammac, gbar, w, nz_)
                    else:
                        p33 = 1.0 - s6 - s7
                        c13 = 2.0 * p33 - 2.0 * (1.0 + gamma0 + gammac) * p33
                        c12 = p33 + gammac * (s6 + s7) + 2.0 * gamma0 * s7
                        r13 = csqrt(0.5 * c13 + 0j)
                        r12 = csqrt(0.5 * c12 + 0j)
                        nz_[0] = r13 * normals[n, 0, k] + 1j * r13 * normals[n, 1, k]
                        nz_[7] = r13 * normals[n, 0, k] + (-1j * r13) * normals[n, 1, k]
                        nz_[2] = r12 * normals[n, 2, k] + 1j * r12 * normals[n, 3, k]
                        nz_[5] = r12 * normals[n, 2, k] + (-1j * r12) * normals[n, 3, k]
                    for j in range(NV):
                        nz_[j] = nz_[j] * noise_scale
                p33 = 1.0 - s6 - s7
                delta = 2.0 * s6 + s7 - 1.0
                # explicit rows
                s[1, k] = s4 + (-big * s4 + fa * s9 + e * (s6 + 2.0 * s7 - 1.0)) * dt + nz_[1]
                s[3, k] = s6 + (p33 - gammac * (s6 - s7) - fa * s11 - fb * s3) * dt + nz_[3]
                s[4, k] = s7 + (p33 - gammac * (s7 - s6) - e * (s4 + s10)) * dt + nz_[4]
                s[6, k] = s10 + (-big * s10 + fb * s5 + e * (2.0 * s7 + s6 - 1.0)) * dt + nz_[6]
                # theta-rule core
                r3 = s3 + om * dt * (-big * s3 + e * s5 + delta * fa) + nz_[0]
                r5 = s5 + om * dt * (-gd * s5 - e * s3) - dt * fa * s10 + nz_[2]
                r11 = s11 + om * dt * (-big * s11 + e * s9 + delta * fb) + nz_[7]
                r9 = s9 + om * dt * (-gd * s9 - e * s11) - dt * fb * s4 + nz_[5]
                m11 = 1.0 + td * (big + 0.5 * h * delta)
                det = m11 * m22 - m12 * m21
                dn = creal(det) * creal(det) + cimag(det) * cimag(det)
                inv = (creal(det) - 1j * cimag(det)) * (1.0 / dn)
                u = r3 + td * delta * ak
                v = r5
                x3 = (m22 * u - m12 * v) * inv
                x5 = (m11 * v - m21 * u) * inv
                u = r11 + td * delta * bk
                v = r9
                x11 = (m22 * u - m12 * v) * inv
                x9 = (m11 * v - m21 * u) * inv
                s[0, k] = x3
                s[2, k] = x5
                s[7, k] = x11
                s[5, k] = x9
                ak = ak - h * x3
                bk = bk - h * x11
                a[k + 1] = ak
                b[k + 1] = bk
                a_prev_old = a_next_old
                b_prev_old = b_next_old
            for p in range(nprobe):
                out[n, 0, p] = a[probes[p]]
                out[n, 1, p] = b[probes[p]]
        amax = 0.0
        gmax = 0.0
        for k in range(nz):
            for j in range(NV):
                x3 = s[j, k]
                if not (isfinite(creal(x3)) and isfinite(cimag(x3))):
                    bad = True
                if cabs(x3) > amax:
                    amax = cabs(x3)
        for k in range(nz + 1):
            if not (isfinite(creal(a[k])) and isfinite(cimag(a[k]))
                    and isfinite(creal(b[k])) and isfinite(cimag(b[k]))):
                bad = True
            if cabs(a[k]) > gmax:
                gmax = cabs(a[k])
            if cabs(b[k]) > gmax:
                gmax = cabs(b[k])
        if amax >= guard or gmax >= guard * gbar:
            bad = True
    return bool(bad)
