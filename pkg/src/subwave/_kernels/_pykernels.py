"""NumPy implementations of the numerical hot kernels.

All quantities are dimensionless: lengths in units of the transition
wavelength, rates in units of the single-emitter decay rate, so the
free-space wavenumber is 2*pi.  The compiled extension (``_ckernels``)
implements the same three entry points with identical semantics; this module
is the fallback selected when the extension is unavailable.
"""
from __future__ import annotations

import numpy as np

K0 = 2.0 * np.pi

# Memory cap for vectorised lattice sums (rows of lattice sites per block).
_BLOCK = 262144


def pair_coupling(dx, dy, dz, dipole):
    """Coherent/dissipative pair coupling J - i*Gamma/2 for displacements.

    dx, dy, dz are broadcastable arrays of displacement components (in
    wavelength units), dipole is a unit complex 3-vector.  Returns the
    complex coupling, whose real part is J and imaginary part -Gamma/2.
    """
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    dz = np.asarray(dz, dtype=float)
    r = np.sqrt(dx * dx + dy * dy + dz * dz)
    kr = K0 * r
    pref = np.exp(1j * kr) / (4.0 * np.pi * K0 * K0 * r**3)
    term_iso = pref * (kr * kr + 1j * kr - 1.0)
    term_rad = pref * (-kr * kr - 3j * kr + 3.0)
    proj = np.abs(dx * dipole[0] + dy * dipole[1] + dz * dipole[2]) ** 2 / (r * r)
    return -(3.0 * np.pi / K0) * (term_iso + term_rad * proj)


def field_coupling(dx, dy, dz, e_out, dipole):
    """Propagator e_out^* . G . d contracted between two unit vectors.

    Returns (3*pi/k0) * e_out^* . G(r) . dipole, the scalar by which an
    emitter coherence multiplies into the detected field component.
    """
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    dz = np.asarray(dz, dtype=float)
    r = np.sqrt(dx * dx + dy * dy + dz * dz)
    kr = K0 * r
    pref = np.exp(1j * kr) / (4.0 * np.pi * K0 * K0 * r**3)
    term_iso = pref * (kr * kr + 1j * kr - 1.0)
    term_rad = pref * (-kr * kr - 3j * kr + 3.0)
    e_conj = np.conj(np.asarray(e_out, dtype=complex))
    ed = e_conj @ np.asarray(dipole, dtype=complex)
    er = (e_conj[0] * dx + e_conj[1] * dy + e_conj[2] * dz) / r
    rd = (dx * dipole[0] + dy * dipole[1] + dz * dipole[2]) / r
    return (3.0 * np.pi / K0) * (term_iso * ed + term_rad * er * rd)


def coupling_matrices(positions, dipole):
    """Assemble the N x N free-space J and Gamma matrices.

    positions: (N, 3) float array; dipole: unit complex 3-vector.
    Diagonal convention: J_jj = 0, Gamma_jj = 1.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if n == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    dx = pos[:, None, 0] - pos[None, :, 0]
    dy = pos[:, None, 1] - pos[None, :, 1]
    dz = pos[:, None, 2] - pos[None, :, 2]
    off = ~np.eye(n, dtype=bool)
    coup = np.zeros((n, n), dtype=complex)
    coup[off] = pair_coupling(dx[off], dy[off], dz[off], np.asarray(dipole, dtype=complex))
    j_mat = coup.real.copy()
    g_mat = -2.0 * coup.imag
    np.fill_diagonal(j_mat, 0.0)
    np.fill_diagonal(g_mat, 1.0)
    return j_mat, g_mat


def field_coupling_matrix(points, positions, e_out, dipole):
    """(P, N) matrix of detection propagators from emitters to field points."""
    pts = np.asarray(points, dtype=float)
    pos = np.asarray(positions, dtype=float)
    dx = pts[:, None, 0] - pos[None, :, 0]
    dy = pts[:, None, 1] - pos[None, :, 1]
    dz = pts[:, None, 2] - pos[None, :, 2]
    return field_coupling(dx, dy, dz, np.asarray(e_out, dtype=complex),
                          np.asarray(dipole, dtype=complex))


def lattice_mode_sums(a, kx, ky, dipole, eps, r_max, taper_frac):
    """Damped square-lattice sums of the pair coupling with a Bloch phase.

    Computes, for every damping value eps[m],

        S_m = sum_{(n1,n2) != 0, r <= r_max} coupling(r) cos(k . r)
              * w(r) * exp(-eps[m] * r)

    over sites r = a*(n1, n2, 0).  ``w`` is a cosine-squared taper applied on
    the outer ``taper_frac`` fraction of the radial cutoff, which suppresses
    the oscillatory truncation error of the conditionally convergent sum.
    Inversion symmetry of the lattice lets the Bloch factor be folded into
    cos(k . r), so the sums are exact lattice quantities, not approximations
    with a broken symmetry.
    """
    eps = np.asarray(eps, dtype=float)
    dipole = np.asarray(dipole, dtype=complex)
    nmax = int(np.floor(r_max / a))
    r1 = r_max * (1.0 - taper_frac)
    out = np.zeros(eps.shape[0], dtype=complex)

    # Half-lattice enumeration: n1 > 0 (all n2), and n1 = 0, n2 > 0.
    n2_all = np.arange(-nmax, nmax + 1)
    rows_per_block = max(1, _BLOCK // (2 * nmax + 1))

    def _blocks():
        yield np.zeros(nmax, dtype=int), np.arange(1, nmax + 1)
        for start in range(1, nmax + 1, rows_per_block):
            n1_block = np.arange(start, min(start + rows_per_block, nmax + 1))
            g1, g2 = np.meshgrid(n1_block, n2_all, indexing="ij")
            yield g1.ravel(), g2.ravel()

    for n1, n2 in _blocks():
        x = a * n1.astype(float)
        y = a * n2.astype(float)
        r2 = x * x + y * y
        sel = (r2 > 0.0) & (r2 <= r_max * r_max)
        if not np.any(sel):
            continue
        x = x[sel]
        y = y[sel]
        r = np.sqrt(r2[sel])
        coup = pair_coupling(x, y, np.zeros_like(x), dipole)
        base = 2.0 * coup * np.cos(kx * x + ky * y)
        tap = r > r1
        if np.any(tap):
            w = np.ones_like(r)
            w[tap] = np.cos(0.5 * np.pi * (r[tap] - r1) / (r_max - r1)) ** 2
            base = base * w
        for m in range(eps.shape[0]):
            out[m] += np.sum(base * np.exp(-eps[m] * r))
    return out
