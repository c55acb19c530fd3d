"""Pure-numpy twins of the compiled kernels in ``_ext.pyx``.

Signatures and in-place semantics match the extension exactly; the
dispatcher in :mod:`qrproj.kernels` picks one of the two at import time.
"""

import numpy as np


def _pairs(psi, stride):
    rows, N = psi.shape
    view = psi.reshape(rows, N // (2 * stride), 2, stride)
    return view[:, :, 0, :], view[:, :, 1, :]


def apply_1q(psi, stride, m):
    a0, a1 = _pairs(psi, stride)
    b0 = m[0, 0] * a0 + m[0, 1] * a1
    a1[...] = m[1, 0] * a0 + m[1, 1] * a1
    a0[...] = b0


def apply_cphase(psi, stride_c, stride_t, phase):
    idx = np.arange(psi.shape[1])
    both = stride_c | stride_t
    psi[:, (idx & both) == both] *= phase


def _rotation_mats(axes, angles):
    """Stack of 2x2 rotation matrices, shape axes.shape + (2, 2)."""
    c = np.cos(0.5 * angles)
    s = np.sin(0.5 * angles)
    mats = np.zeros(axes.shape + (2, 2), dtype=complex)
    x, y, z = axes == 0, axes == 1, axes == 2
    mats[..., 0, 0] = np.where(z, c - 1j * s, c)
    mats[..., 1, 1] = np.where(z, c + 1j * s, c)
    mats[..., 0, 1] = np.where(x, -1j * s, np.where(y, -s, 0.0))
    mats[..., 1, 0] = np.where(x, -1j * s, np.where(y, s, 0.0))
    return mats


def apply_layers(psi, axes, angles, row_circuit, signs, inverse=False):
    rows, N = psi.shape
    depth, n = axes.shape[1], axes.shape[2]
    ang = -angles if inverse else angles
    row_circuit = np.asarray(row_circuit)
    order = range(depth - 1, -1, -1) if inverse else range(depth)
    for d in order:
        if inverse:
            psi *= signs
        mats = _rotation_mats(np.asarray(axes[:, d]), np.asarray(ang[:, d]))[row_circuit]
        for q in range(n):
            a0, a1 = _pairs(psi, N >> (q + 1))
            m = mats[:, q, :, :, None, None]
            b0 = m[:, 0, 0] * a0 + m[:, 0, 1] * a1
            a1[...] = m[:, 1, 0] * a0 + m[:, 1, 1] * a1
            a0[...] = b0
        if not inverse:
            psi *= signs


def fwht_rows(x):
    rows, N = x.shape
    h = 1
    while h < N:
        view = x.reshape(rows, N // (2 * h), 2, h)
        a = view[:, :, 0, :].copy()
        b = view[:, :, 1, :]
        view[:, :, 0, :] += b
        view[:, :, 1, :] = a - b
        h *= 2
    x *= 1.0 / np.sqrt(N)


def jacobi_sweeps(cols, v, tol, floor, max_sweeps):
    n = cols.shape[0]
    with_v = v.shape[0] > 0
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                a, b = cols[p], cols[q]
                alpha = np.vdot(a, a).real
                beta = np.vdot(b, b).real
                gamma = np.vdot(a, b)
                g_abs = abs(gamma)
                if g_abs == 0.0 or alpha < floor or beta < floor or g_abs <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                ph = np.conj(gamma) / g_abs
                if not np.iscomplexobj(cols):
                    ph = ph.real
                zeta = (beta - alpha) / (2.0 * g_abs)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t
                cols[p], cols[q] = cs * a - (sn * ph) * b, (sn * np.conj(ph)) * a + cs * b
                if with_v:
                    a, b = v[p], v[q]
                    v[p], v[q] = cs * a - (sn * ph) * b, (sn * np.conj(ph)) * a + cs * b
        if not rotated:
            return sweep
    return -1
