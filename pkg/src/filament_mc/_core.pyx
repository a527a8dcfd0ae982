# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: phase-sum transform, pairwise kernel sums, area sums.

Same contracts as _kernels_fallback; compiled with -O3 -ffast-math so the
sin/cos loops hit the vectorized libmvec routines.  All loops release the
GIL, so ensembles parallelize with plain threads.
"""

import numpy as np

cimport cython
from libc.math cimport cos, cosf, exp, sin, sinf, sqrt

BACKEND = "compiled"


def transform_sums(double[:, ::1] dots, double[::1] qs, double[:, ::1] deltas):
    """Y[i, a] = sum_j exp(1j q_i dots[a, j]) deltas[j]; returns (Y_re, Y_im).

    Phases are formed in double precision; the sin/cos evaluations run in
    single precision (vectorized), accumulation back in double.  The ~1e-7
    trig error is orders of magnitude below every quadrature tolerance.
    """
    cdef Py_ssize_t A = dots.shape[0], n = dots.shape[1], R = qs.shape[0]
    if deltas.shape[0] != n:
        raise ValueError("deltas length must match dots columns")
    y_re = np.empty((R, A, 3))
    y_im = np.empty((R, A, 3))
    cdef double[:, :, ::1] yr = y_re, yi = y_im
    cdef double[::1] d0 = np.ascontiguousarray(np.asarray(deltas)[:, 0])
    cdef double[::1] d1 = np.ascontiguousarray(np.asarray(deltas)[:, 1])
    cdef double[::1] d2 = np.ascontiguousarray(np.asarray(deltas)[:, 2])
    ph_b = np.empty(n, dtype=np.float32)
    si_b = np.empty(n, dtype=np.float32)
    co_b = np.empty(n, dtype=np.float32)
    cdef float[::1] ph = ph_b, si = si_b, co = co_b
    cdef Py_ssize_t a, i, j
    cdef double qi, c0, c1, c2, s0, s1, s2, cj, sj
    with nogil:
        for a in range(A):
            for i in range(R):
                qi = qs[i]
                for j in range(n):
                    ph[j] = <float> (qi * dots[a, j])
                for j in range(n):
                    si[j] = sinf(ph[j])
                for j in range(n):
                    co[j] = cosf(ph[j])
                c0 = c1 = c2 = s0 = s1 = s2 = 0.0
                for j in range(n):
                    cj = co[j]; sj = si[j]
                    c0 += cj * d0[j]; c1 += cj * d1[j]; c2 += cj * d2[j]
                    s0 += sj * d0[j]; s1 += sj * d1[j]; s2 += sj * d2[j]
                yr[i, a, 0] = c0; yr[i, a, 1] = c1; yr[i, a, 2] = c2
                yi[i, a, 0] = s0; yi[i, a, 1] = s1; yi[i, a, 2] = s2
    return y_re, y_im


cdef inline double _interp(const double* tab, double inv_dr, double r_max,
                           Py_ssize_t ntab, double r) noexcept nogil:
    cdef double u
    cdef Py_ssize_t idx
    if r >= r_max:
        return tab[ntab - 1]
    u = r * inv_dr
    idx = <Py_ssize_t> u
    u -= idx
    return tab[idx] + u * (tab[idx + 1] - tab[idx])


def pair_sums(double[:, ::1] points, double[:, ::1] deltas,
              double[::1] table_r, double[::1] table_g, double[::1] table_rho2):
    """Ordered-pair sums: (gamma double-stochastic term, local-time off-diagonal)."""
    cdef Py_ssize_t n = deltas.shape[0], ntab = table_r.shape[0]
    if points.shape[0] != n + 1:
        raise ValueError("points must have one more row than deltas")
    cdef double r_max = table_r[ntab - 1]
    cdef double inv_dr = (ntab - 1) / r_max
    cdef const double* tg = &table_g[0]
    cdef const double* t2 = &table_rho2[0]
    cdef double dbl = 0.0, lt = 0.0
    cdef Py_ssize_t i, j
    cdef double xj0, xj1, xj2, dj0, dj1, dj2, ux, uy, uz, rb, rn, dots
    with nogil:
        for j in range(1, n):
            xj0 = points[j, 0]; xj1 = points[j, 1]; xj2 = points[j, 2]
            dj0 = deltas[j, 0]; dj1 = deltas[j, 1]; dj2 = deltas[j, 2]
            for i in range(j):
                ux = xj0 - points[i + 1, 0]
                uy = xj1 - points[i + 1, 1]
                uz = xj2 - points[i + 1, 2]
                rb = sqrt(ux * ux + uy * uy + uz * uz)
                ux = xj0 - points[i, 0]
                uy = xj1 - points[i, 1]
                uz = xj2 - points[i, 2]
                rn = sqrt(ux * ux + uy * uy + uz * uz)
                dots = dj0 * deltas[i, 0] + dj1 * deltas[i, 1] + dj2 * deltas[i, 2]
                dbl += _interp(tg, inv_dr, r_max, ntab, rb) * dots
                lt += _interp(t2, inv_dr, r_max, ntab, rn)
    return float(dbl), float(lt)


def pair_sums_b(double[:, ::1] points, double[:, ::1] deltas,
                double[::1] table_r, double[::1] table_bi, double[::1] table_bu):
    """sum_{i<j} dX_i . B(X_j - X_{i+1}) dX_j, B = b_i I + b_u uhat uhat^T."""
    cdef Py_ssize_t n = deltas.shape[0], ntab = table_r.shape[0]
    cdef double r_max = table_r[ntab - 1]
    cdef double inv_dr = (ntab - 1) / r_max
    cdef const double* tbi = &table_bi[0]
    cdef const double* tbu = &table_bu[0]
    cdef double total = 0.0
    cdef Py_ssize_t i, j
    cdef double xj0, xj1, xj2, dj0, dj1, dj2, ux, uy, uz, r2, r, dots, duj, dui
    with nogil:
        for j in range(1, n):
            xj0 = points[j, 0]; xj1 = points[j, 1]; xj2 = points[j, 2]
            dj0 = deltas[j, 0]; dj1 = deltas[j, 1]; dj2 = deltas[j, 2]
            for i in range(j):
                ux = xj0 - points[i + 1, 0]
                uy = xj1 - points[i + 1, 1]
                uz = xj2 - points[i + 1, 2]
                r2 = ux * ux + uy * uy + uz * uz
                r = sqrt(r2)
                dots = dj0 * deltas[i, 0] + dj1 * deltas[i, 1] + dj2 * deltas[i, 2]
                total += _interp(tbi, inv_dr, r_max, ntab, r) * dots
                if r2 > 0.0:
                    duj = ux * dj0 + uy * dj1 + uz * dj2
                    dui = ux * deltas[i, 0] + uy * deltas[i, 1] + uz * deltas[i, 2]
                    total += _interp(tbu, inv_dr, r_max, ntab, r) * duj * dui / r2
    return float(total)


def cross_pair_sums(double[:, ::1] pts_x, double[:, ::1] del_x,
                    double[:, ::1] pts_y, double[:, ::1] del_y,
                    double dt, double eps, double min_dist):
    """All-pairs Coulomb / Tanaka-Rosen / mollified-delta sums of two paths."""
    cdef Py_ssize_t n = del_x.shape[0], m = del_y.shape[0]
    cdef double coulomb = 0.0, tanaka = 0.0, moll = 0.0
    cdef long excluded = 0
    cdef double norm_eps = (2.0 * np.pi * eps * eps) ** -1.5
    cdef double inv2e2 = 0.5 / (eps * eps)
    cdef Py_ssize_t j, i
    cdef double xj0, xj1, xj2, dj0, dj1, dj2
    cdef double ux, uy, uz, r2, r, inv_r, inv_r3, v0, v1, v2
    with nogil:
        for j in range(n):
            xj0 = pts_x[j, 0]; xj1 = pts_x[j, 1]; xj2 = pts_x[j, 2]
            dj0 = del_x[j, 0]; dj1 = del_x[j, 1]; dj2 = del_x[j, 2]
            v0 = v1 = v2 = 0.0
            for i in range(m):
                ux = xj0 - pts_y[i, 0]
                uy = xj1 - pts_y[i, 1]
                uz = xj2 - pts_y[i, 2]
                r2 = ux * ux + uy * uy + uz * uz
                r = sqrt(r2)
                if r < min_dist:
                    excluded += 1
                    continue
                inv_r = 1.0 / r
                inv_r3 = inv_r / r2
                coulomb += inv_r * (dj0 * del_y[i, 0] + dj1 * del_y[i, 1] + dj2 * del_y[i, 2])
                v0 += ux * inv_r3; v1 += uy * inv_r3; v2 += uz * inv_r3
                moll += exp(-r2 * inv2e2)
            tanaka += (v0 * dj0 + v1 * dj1 + v2 * dj2) * dt
    return float(coulomb), float(tanaka), float(moll * norm_eps * dt * dt), int(excluded)


def area_sums(double[::1] radii, double[:, ::1] wedge, double[::1] qs):
    """V[i] = sum_j Psi(q_i r_j) wedge[j], Psi(z) = cos(z)/z - sin(z)/z^2."""
    cdef Py_ssize_t n = radii.shape[0], R = qs.shape[0]
    out = np.zeros((R, 3))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double q, z, psi, w0, w1, w2
    with nogil:
        for i in range(R):
            q = qs[i]
            w0 = w1 = w2 = 0.0
            for j in range(n):
                z = q * radii[j]
                if z < 1e-4:
                    psi = -z / 3.0
                else:
                    psi = cos(z) / z - sin(z) / (z * z)
                w0 += psi * wedge[j, 0]
                w1 += psi * wedge[j, 1]
                w2 += psi * wedge[j, 2]
            o[i, 0] = w0; o[i, 1] = w1; o[i, 2] = w2
    return out
