# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: pairwise coupling assembly, detection propagators,
and damped lattice sums.  Semantics identical to the NumPy fallback in
``_pykernels``; lengths in wavelength units, rates in single-emitter units.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, cos, exp, sin, sqrt

cnp.import_array()

cdef double K0 = 2.0 * M_PI


cdef inline void _radial_terms(double r, double* re_iso, double* im_iso,
                               double* re_rad, double* im_rad) nogil:
    """Real/imaginary parts of the two radial factors of the dyadic kernel."""
    cdef double kr = K0 * r
    cdef double c = cos(kr)
    cdef double s = sin(kr)
    cdef double denom = 4.0 * M_PI * K0 * K0 * r * r * r
    # e^{i kr} (kr^2 + i kr - 1) / denom
    re_iso[0] = (c * (kr * kr - 1.0) - s * kr) / denom
    im_iso[0] = (s * (kr * kr - 1.0) + c * kr) / denom
    # e^{i kr} (-kr^2 - 3 i kr + 3) / denom
    re_rad[0] = (c * (3.0 - kr * kr) + 3.0 * s * kr) / denom
    im_rad[0] = (s * (3.0 - kr * kr) - 3.0 * c * kr) / denom


def coupling_matrices(positions, dipole):
    """Free-space J and Gamma matrices; J_jj = 0, Gamma_jj = 1."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pos = np.ascontiguousarray(positions, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] d = np.ascontiguousarray(dipole, dtype=np.complex128)
    cdef Py_ssize_t n = pos.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] jm = np.zeros((n, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gm = np.zeros((n, n), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, r, re_iso, im_iso, re_rad, im_rad
    cdef double proj, re_d, im_d, re_c, im_c, jv, gv
    cdef double d0r = d[0].real, d0i = d[0].imag
    cdef double d1r = d[1].real, d1i = d[1].imag
    cdef double d2r = d[2].real, d2i = d[2].imag
    cdef double pref = 3.0 * M_PI / K0
    for i in range(n):
        gm[i, i] = 1.0
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dz = pos[i, 2] - pos[j, 2]
            r = sqrt(dx * dx + dy * dy + dz * dz)
            _radial_terms(r, &re_iso, &im_iso, &re_rad, &im_rad)
            re_d = dx * d0r + dy * d1r + dz * d2r
            im_d = dx * d0i + dy * d1i + dz * d2i
            proj = (re_d * re_d + im_d * im_d) / (r * r)
            # coupling = -(3 pi / k0) (iso + rad * proj); J = Re, Gamma = -2 Im
            re_c = -pref * (re_iso + re_rad * proj)
            im_c = -pref * (im_iso + im_rad * proj)
            jv = re_c
            gv = -2.0 * im_c
            jm[i, j] = jv
            jm[j, i] = jv
            gm[i, j] = gv
            gm[j, i] = gv
    return jm, gm


def field_coupling_matrix(points, positions, e_out, dipole):
    """(P, N) detection propagators (3 pi / k0) e_out^* . G . d."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pos = np.ascontiguousarray(positions, dtype=np.float64)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] e = np.conj(np.ascontiguousarray(e_out, dtype=np.complex128))
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] d = np.ascontiguousarray(dipole, dtype=np.complex128)
    cdef Py_ssize_t np_ = pts.shape[0], n = pos.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((np_, n), dtype=np.complex128)
    cdef Py_ssize_t p, j
    cdef double dx, dy, dz, r, re_iso, im_iso, re_rad, im_rad
    cdef double complex ed, er, rd, iso, rad
    cdef double pref = 3.0 * M_PI / K0
    ed = e[0] * d[0] + e[1] * d[1] + e[2] * d[2]
    for p in range(np_):
        for j in range(n):
            dx = pts[p, 0] - pos[j, 0]
            dy = pts[p, 1] - pos[j, 1]
            dz = pts[p, 2] - pos[j, 2]
            r = sqrt(dx * dx + dy * dy + dz * dz)
            _radial_terms(r, &re_iso, &im_iso, &re_rad, &im_rad)
            iso = re_iso + 1j * im_iso
            rad = re_rad + 1j * im_rad
            er = (e[0] * dx + e[1] * dy + e[2] * dz) / r
            rd = (d[0] * dx + d[1] * dy + d[2] * dz) / r
            out[p, j] = pref * (iso * ed + rad * er * rd)
    return out


def lattice_mode_sums(double a, double kx, double ky, dipole, eps, double r_max,
                      double taper_frac):
    """Damped, tapered half-lattice sums folded with cos(k . r).

    Returns one complex partial sum per damping value, matching the NumPy
    implementation bit-for-bit in structure (modulo summation order).
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] d = np.ascontiguousarray(dipole, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ep = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t m = ep.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc_re = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc_im = np.zeros(m, dtype=np.float64)
    cdef long nmax = <long>(r_max / a)
    cdef double r1 = r_max * (1.0 - taper_frac)
    cdef long n1, n2, n2lo
    cdef Py_ssize_t q
    cdef double x, y, r, w, damp, bloch
    cdef double re_iso, im_iso, re_rad, im_rad, re_d, im_d, proj, re_c, im_c
    cdef double pref = 3.0 * M_PI / K0
    cdef double d0r = d[0].real, d0i = d[0].imag
    cdef double d1r = d[1].real, d1i = d[1].imag
    # a descending ladder with exact ratio 2 needs one exponential per site:
    # exp(-2 eps r) is the square of exp(-eps r)
    cdef bint ratio2 = m > 1
    for q in range(m - 1):
        if ep[q] <= 0 or abs(ep[q] / ep[q + 1] - 2.0) > 1e-12:
            ratio2 = False
            break
    with nogil:
        for n1 in range(0, nmax + 1):
            n2lo = 1 if n1 == 0 else -nmax
            x = a * n1
            for n2 in range(n2lo, nmax + 1):
                y = a * n2
                r = sqrt(x * x + y * y)
                if r == 0.0 or r > r_max:
                    continue
                _radial_terms(r, &re_iso, &im_iso, &re_rad, &im_rad)
                re_d = x * d0r + y * d1r
                im_d = x * d0i + y * d1i
                proj = (re_d * re_d + im_d * im_d) / (r * r)
                re_c = -pref * (re_iso + re_rad * proj)
                im_c = -pref * (im_iso + im_rad * proj)
                bloch = 2.0 * cos(kx * x + ky * y)
                if r > r1:
                    w = cos(0.5 * M_PI * (r - r1) / (r_max - r1))
                    bloch *= w * w
                re_c *= bloch
                im_c *= bloch
                if ratio2:
                    damp = exp(-ep[m - 1] * r)
                    for q in range(m - 1, -1, -1):
                        acc_re[q] += re_c * damp
                        acc_im[q] += im_c * damp
                        damp = damp * damp
                else:
                    for q in range(m):
                        damp = exp(-ep[q] * r)
                        acc_re[q] += re_c * damp
                        acc_im[q] += im_c * damp
    return acc_re + 1j * acc_im
