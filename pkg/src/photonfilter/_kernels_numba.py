"""Numba-compiled trajectory kernels (the default backend).

Same algorithms and signatures as `_kernels_numpy`, rewritten with explicit
index loops over COO operator tables.  Every model operator here is a
ladder/number construction with O(d) nonzeros, so one full filter step costs
O(d^2) work with no temporaries allocated inside the time loop.  Kernels are
compiled with `nogil` so trajectory workers scale across threads.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._plan import (
    SME_G_OFF, SME_L, SME_LDL, SME_LPLD, SME_HXI, SME_FB, SME_EXTRA0,
    SSE_H0, SSE_HXI, SSE_L, SSE_SM, SSE_CROSS, SSE_OBS0,
)
from ._kernels_numpy import (
    STATUS_OK, STATUS_STEP_SIZE, STATUS_CORRUPTED, STATUS_UNSTABLE,
    STATUS_JUMP_OVERFLOW, STATUS_IMPOSSIBLE_JUMP,
    NU_NEGATIVE_TOL, K_IMAG_TOL, JUMP_PROB_CAP, TRACE_FLOOR,
)

_ONE = 1.0 + 0.0j


@njit(cache=True, inline="always")
def _lapply(rows, cols, vals, lo, hi, X, out, s):
    # out += s * op @ X
    d = X.shape[1]
    for idx in range(lo, hi):
        r = rows[idx]
        c = cols[idx]
        v = s * vals[idx]
        for j in range(d):
            out[r, j] += v * X[c, j]


@njit(cache=True, inline="always")
def _ldapply(rows, cols, vals, lo, hi, X, out, s):
    # out += s * op^+ @ X
    d = X.shape[1]
    for idx in range(lo, hi):
        r = rows[idx]
        c = cols[idx]
        v = s * np.conj(vals[idx])
        for j in range(d):
            out[c, j] += v * X[r, j]


@njit(cache=True, inline="always")
def _rapply(rows, cols, vals, lo, hi, X, out, s):
    # out += s * X @ op
    d = X.shape[0]
    for idx in range(lo, hi):
        r = rows[idx]
        c = cols[idx]
        v = s * vals[idx]
        for i in range(d):
            out[i, c] += v * X[i, r]


@njit(cache=True, inline="always")
def _rapply_dag(rows, cols, vals, lo, hi, X, out, s):
    # out += s * X @ op^+
    d = X.shape[0]
    for idx in range(lo, hi):
        r = rows[idx]
        c = cols[idx]
        v = s * np.conj(vals[idx])
        for i in range(d):
            out[i, r] += v * X[i, c]


@njit(cache=True, inline="always")
def _lapply_ct(rows, cols, vals, lo, hi, X, out, s):
    # out += s * op @ X^+
    d = X.shape[0]
    for idx in range(lo, hi):
        r = rows[idx]
        c = cols[idx]
        v = s * vals[idx]
        for j in range(d):
            out[r, j] += v * np.conj(X[j, c])


@njit(cache=True, inline="always")
def _sandwich(rows, cols, vals, lo, hi, X, tmp, out):
    # out += op @ X @ op^+ ; tmp is scratch
    tmp[:, :] = 0.0
    _lapply(rows, cols, vals, lo, hi, X, tmp, _ONE)
    _rapply_dag(rows, cols, vals, lo, hi, tmp, out, _ONE)


@njit(cache=True, inline="always")
def _trace_prod(rows, cols, vals, lo, hi, X):
    # tr[op @ X]
    t = 0.0 + 0.0j
    for idx in range(lo, hi):
        t += vals[idx] * X[cols[idx], rows[idx]]
    return t


@njit(cache=True, inline="always")
def _trace_prod_dag(rows, cols, vals, lo, hi, X):
    # tr[op^+ @ X]
    t = 0.0 + 0.0j
    for idx in range(lo, hi):
        t += np.conj(vals[idx]) * X[rows[idx], cols[idx]]
    return t


@njit(cache=True, inline="always")
def _diag_trace(X):
    t = 0.0
    for i in range(X.shape[0]):
        t += X[i, i].real
    return t


@njit(cache=True, nogil=True)
def sme_photodetect_traj(hier, g_diag, ptr, rows, cols, vals,
                         n_extra, has_hxi, has_fb, fb_gen_diag, chi,
                         xi, absxi2, xi_drive, uniforms, dt, stride,
                         obs_out, tr00_out, nu_out, jump_out, resid_out,
                         sampled_r11):
    d = hier.shape[1]
    n_steps = uniforms.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_r11.shape[0] > 0
    acc = np.zeros((3, d, d), np.complex128)
    tmp = np.zeros((d, d), np.complex128)
    gl = np.zeros(d, np.complex128)
    n_jumps = 0

    l_lo, l_hi = ptr[SME_L], ptr[SME_L + 1]
    g_lo, g_hi = ptr[SME_G_OFF], ptr[SME_G_OFF + 1]
    ldl_lo, ldl_hi = ptr[SME_LDL], ptr[SME_LDL + 1]
    hx_lo, hx_hi = ptr[SME_HXI], ptr[SME_HXI + 1]
    fb_lo, fb_hi = ptr[SME_FB], ptr[SME_FB + 1]

    for k in range(n_steps + 1):
        r00 = hier[0]
        r01 = hier[1]
        r11 = hier[2]
        xk = xi[k]
        x2 = absxi2[k]
        tr00 = _diag_trace(r00)
        # nu = tr[L+L r11] + 2 Re(xi tr[L+ r01]) + |xi|^2 tr r00
        S = _trace_prod_dag(rows, cols, vals, l_lo, l_hi, r01)
        nu = (_trace_prod(rows, cols, vals, ldl_lo, ldl_hi, r11)).real \
            + 2.0 * (xk * S).real + x2 * tr00
        nu_out[k] = nu
        if k % stride == 0:
            s_i = k // stride
            tr00_out[s_i] = tr00
            for io in range(k_obs):
                o = SME_EXTRA0 + n_extra + io
                obs_out[io, s_i] = _trace_prod(rows, cols, vals,
                                               ptr[o], ptr[o + 1], r11)
            if record_states:
                for i in range(d):
                    for j in range(d):
                        sampled_r11[s_i, i, j] = r11[i, j]
        if k == n_steps:
            break
        if nu < NU_NEGATIVE_TOL:
            return (STATUS_CORRUPTED, n_jumps, k)
        if nu < 0.0:
            nu = 0.0
        if nu * dt >= JUMP_PROB_CAP:
            return (STATUS_STEP_SIZE, n_jumps, k)

        if uniforms[k] < nu * dt:
            # detection: shared replacement maps, then renormalize
            if n_jumps >= jump_out.shape[0]:
                return (STATUS_JUMP_OVERFLOW, n_jumps, k)
            acc[:, :, :] = 0.0
            _sandwich(rows, cols, vals, l_lo, l_hi, r00, tmp, acc[0])
            _sandwich(rows, cols, vals, l_lo, l_hi, r01, tmp, acc[1])
            _lapply(rows, cols, vals, l_lo, l_hi, r00, acc[1], np.conj(xk))
            _sandwich(rows, cols, vals, l_lo, l_hi, r11, tmp, acc[2])
            tmp[:, :] = 0.0
            _lapply_ct(rows, cols, vals, l_lo, l_hi, r01, tmp, np.conj(xk))
            for i in range(d):
                for j in range(d):
                    acc[2, i, j] += tmp[i, j] + np.conj(tmp[j, i]) \
                        + x2 * r00[i, j]
            inv_nu = 1.0 / nu
            for c in range(3):
                for i in range(d):
                    for j in range(d):
                        hier[c, i, j] = acc[c, i, j] * inv_nu
            jump_out[n_jumps] = (k + 1) * dt
            n_jumps += 1
        else:
            # no-click drift (jump equation with the compensator subtracted)
            delta = 0.0
            if has_fb:
                delta = -chi * (_trace_prod(rows, cols, vals,
                                            fb_lo, fb_hi, r11)).real
            acc[:, :, :] = 0.0
            for c in range(3):
                X = hier[c]
                out = acc[c]
                _lapply(rows, cols, vals, g_lo, g_hi, X, out, _ONE)
                _rapply_dag(rows, cols, vals, g_lo, g_hi, X, out, _ONE)
                if has_hxi:
                    xd = xi_drive[k]
                    _lapply(rows, cols, vals, hx_lo, hx_hi, X, out, -1j * xd)
                    _ldapply(rows, cols, vals, hx_lo, hx_hi, X, out,
                             -1j * np.conj(xd))
                    _rapply_dag(rows, cols, vals, hx_lo, hx_hi, X, out,
                                1j * np.conj(xd))
                    _rapply(rows, cols, vals, hx_lo, hx_hi, X, out, 1j * xd)
                for e in range(n_extra):
                    o = SME_EXTRA0 + e
                    _sandwich(rows, cols, vals, ptr[o], ptr[o + 1], X, tmp, out)
            tmp[:, :] = 0.0
            _ldapply(rows, cols, vals, l_lo, l_hi, r01, tmp, _ONE)
            for i in range(d):
                for j in range(d):
                    acc[2, i, j] += -xk * tmp[i, j] \
                        - np.conj(xk * tmp[j, i]) - x2 * r00[i, j]
            _rapply(rows, cols, vals, l_lo, l_hi, r00, acc[1], -np.conj(xk))
            for i in range(d):
                gl[i] = g_diag[i] - 1j * delta * fb_gen_diag[i]
            for c in range(3):
                X = hier[c]
                for i in range(d):
                    gli = gl[i]
                    for j in range(d):
                        X[i, j] = X[i, j] * (1.0 + dt * (gli + np.conj(gl[j]) + nu)) \
                            + dt * acc[c, i, j]

        tr = _diag_trace(hier[2])
        if not (TRACE_FLOOR < tr < 2.0):
            return (STATUS_UNSTABLE, n_jumps, k)
        inv = 1.0 / tr
        for c in range(3):
            for i in range(d):
                for j in range(d):
                    hier[c, i, j] *= inv
        e0 = abs(_diag_trace(hier[2]) - 1.0)
        if e0 > resid_out[0]:
            resid_out[0] = e0
        hmax = 0.0
        for i in range(d):
            for j in range(i, d):
                e1 = abs(hier[2, i, j] - np.conj(hier[2, j, i]))
                if e1 > hmax:
                    hmax = e1
                e1 = abs(hier[0, i, j] - np.conj(hier[0, j, i]))
                if e1 > hmax:
                    hmax = e1
        if hmax > resid_out[1]:
            resid_out[1] = hmax
    return (STATUS_OK, n_jumps, -1)


@njit(cache=True, nogil=True)
def sme_homodyne_traj(hier, g_diag, ptr, rows, cols, vals,
                      n_extra, has_hxi, has_fb, fb_gen_diag, chi,
                      xi, absxi2, xi_drive, normals, dt, stride,
                      obs_out, tr00_out, k_out, dy_out, resid_out,
                      sampled_r11):
    d = hier.shape[1]
    n_steps = normals.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_r11.shape[0] > 0
    acc = np.zeros((3, d, d), np.complex128)
    accw = np.zeros((3, d, d), np.complex128)
    tmp = np.zeros((d, d), np.complex128)
    gl = np.zeros(d, np.complex128)
    sqdt = math.sqrt(dt)

    l_lo, l_hi = ptr[SME_L], ptr[SME_L + 1]
    g_lo, g_hi = ptr[SME_G_OFF], ptr[SME_G_OFF + 1]
    lp_lo, lp_hi = ptr[SME_LPLD], ptr[SME_LPLD + 1]
    hx_lo, hx_hi = ptr[SME_HXI], ptr[SME_HXI + 1]
    fb_lo, fb_hi = ptr[SME_FB], ptr[SME_FB + 1]

    for k in range(n_steps + 1):
        r00 = hier[0]
        r01 = hier[1]
        r11 = hier[2]
        xk = xi[k]
        quad = _trace_prod(rows, cols, vals, lp_lo, lp_hi, r11)
        tr01 = 0.0 + 0.0j
        for i in range(d):
            tr01 += r01[i, i]
        K = quad.real + 2.0 * (xk * tr01).real
        k_out[k] = K
        if k % stride == 0:
            s_i = k // stride
            tr00_out[s_i] = _diag_trace(r00)
            for io in range(k_obs):
                o = SME_EXTRA0 + n_extra + io
                obs_out[io, s_i] = _trace_prod(rows, cols, vals,
                                               ptr[o], ptr[o + 1], r11)
            if record_states:
                for i in range(d):
                    for j in range(d):
                        sampled_r11[s_i, i, j] = r11[i, j]
        if k == n_steps:
            break
        if abs(quad.imag) >= K_IMAG_TOL:
            return (STATUS_CORRUPTED, k)

        dW = normals[k] * sqdt
        dy_out[k] = K * dt + dW
        delta = 0.0
        if has_fb:
            delta = -chi * (_trace_prod(rows, cols, vals, fb_lo, fb_hi, r11)).real

        acc[:, :, :] = 0.0
        accw[:, :, :] = 0.0
        for c in range(3):
            X = hier[c]
            out = acc[c]
            _lapply(rows, cols, vals, g_lo, g_hi, X, out, _ONE)
            _rapply_dag(rows, cols, vals, g_lo, g_hi, X, out, _ONE)
            if has_hxi:
                xd = xi_drive[k]
                _lapply(rows, cols, vals, hx_lo, hx_hi, X, out, -1j * xd)
                _ldapply(rows, cols, vals, hx_lo, hx_hi, X, out, -1j * np.conj(xd))
                _rapply_dag(rows, cols, vals, hx_lo, hx_hi, X, out, 1j * np.conj(xd))
                _rapply(rows, cols, vals, hx_lo, hx_hi, X, out, 1j * xd)
            _sandwich(rows, cols, vals, l_lo, l_hi, X, tmp, out)
            for e in range(n_extra):
                o = SME_EXTRA0 + e
                _sandwich(rows, cols, vals, ptr[o], ptr[o + 1], X, tmp, out)
            # diffusive bracket minus the K rho part (folded into the
            # fused update below)
            _lapply(rows, cols, vals, l_lo, l_hi, X, accw[c], _ONE)
            _rapply_dag(rows, cols, vals, l_lo, l_hi, X, accw[c], _ONE)
        # pulse cross terms, drift
        tmp[:, :] = 0.0
        _rapply_dag(rows, cols, vals, l_lo, l_hi, r01, tmp, xk)
        _ldapply(rows, cols, vals, l_lo, l_hi, r01, tmp, -xk)
        for i in range(d):
            for j in range(d):
                acc[2, i, j] += tmp[i, j] + np.conj(tmp[j, i])
        _lapply(rows, cols, vals, l_lo, l_hi, r00, acc[1], np.conj(xk))
        _rapply(rows, cols, vals, l_lo, l_hi, r00, acc[1], -np.conj(xk))
        # pulse cross terms, bracket
        for i in range(d):
            for j in range(d):
                accw[2, i, j] += xk * r01[i, j] + np.conj(xk * r01[j, i])
                accw[1, i, j] += np.conj(xk) * r00[i, j]
        for i in range(d):
            gl[i] = g_diag[i] - 1j * delta * fb_gen_diag[i]
        for c in range(3):
            X = hier[c]
            for i in range(d):
                gli = gl[i]
                for j in range(d):
                    X[i, j] = X[i, j] * (1.0 + dt * (gli + np.conj(gl[j])) - dW * K) \
                        + dt * acc[c, i, j] + dW * accw[c, i, j]

        tr = _diag_trace(hier[2])
        if not (TRACE_FLOOR < tr < 2.0):
            return (STATUS_UNSTABLE, k)
        inv = 1.0 / tr
        for c in range(3):
            for i in range(d):
                for j in range(d):
                    hier[c, i, j] *= inv
        e0 = abs(_diag_trace(hier[2]) - 1.0)
        if e0 > resid_out[0]:
            resid_out[0] = e0
        hmax = 0.0
        for i in range(d):
            for j in range(i, d):
                e1 = abs(hier[2, i, j] - np.conj(hier[2, j, i]))
                if e1 > hmax:
                    hmax = e1
                e1 = abs(hier[0, i, j] - np.conj(hier[0, j, i]))
                if e1 > hmax:
                    hmax = e1
        if hmax > resid_out[1]:
            resid_out[1] = hmax
    return (STATUS_OK, -1)


@njit(cache=True, inline="always")
def _matvec(rows, cols, vals, lo, hi, x, out, s):
    for idx in range(lo, hi):
        out[rows[idx]] += s * vals[idx] * x[cols[idx]]


@njit(cache=True, inline="always")
def _matvec_dag(rows, cols, vals, lo, hi, x, out, s):
    for idx in range(lo, hi):
        out[cols[idx]] += s * np.conj(vals[idx]) * x[rows[idx]]


@njit(cache=True, inline="always")
def _expect(rows, cols, vals, lo, hi, psi):
    t = 0.0 + 0.0j
    for idx in range(lo, hi):
        t += np.conj(psi[rows[idx]]) * vals[idx] * psi[cols[idx]]
    return t


@njit(cache=True, nogil=True)
def sse_photodetect_traj(psi, ptr, rows, cols, vals, has_hxi, xi_drive, ratio,
                         uniforms, dt, stride, obs_out, rate_out, jump_out,
                         sampled_psi):
    d = psi.shape[0]
    n_steps = uniforms.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_psi.shape[0] > 0
    phi = np.zeros(d, np.complex128)
    dpsi = np.zeros(d, np.complex128)
    ldlpsi = np.zeros(d, np.complex128)
    n_jumps = 0

    h0_lo, h0_hi = ptr[SSE_H0], ptr[SSE_H0 + 1]
    hx_lo, hx_hi = ptr[SSE_HXI], ptr[SSE_HXI + 1]
    l_lo, l_hi = ptr[SSE_L], ptr[SSE_L + 1]
    sm_lo, sm_hi = ptr[SSE_SM], ptr[SSE_SM + 1]
    cr_lo, cr_hi = ptr[SSE_CROSS], ptr[SSE_CROSS + 1]

    for k in range(n_steps + 1):
        r = ratio[k]
        phi[:] = 0.0
        _matvec(rows, cols, vals, l_lo, l_hi, psi, phi, _ONE)
        _matvec(rows, cols, vals, sm_lo, sm_hi, psi, phi, r)
        rate = 0.0
        for i in range(d):
            rate += phi[i].real * phi[i].real + phi[i].imag * phi[i].imag
        rate_out[k] = rate
        if k % stride == 0:
            s_i = k // stride
            for io in range(k_obs):
                o = SSE_OBS0 + io
                obs_out[io, s_i] = _expect(rows, cols, vals, ptr[o], ptr[o + 1], psi)
            if record_states:
                for i in range(d):
                    sampled_psi[s_i, i] = psi[i]
        if k == n_steps:
            break
        if rate * dt >= JUMP_PROB_CAP:
            return (STATUS_STEP_SIZE, n_jumps, k)

        if uniforms[k] < rate * dt:
            if n_jumps >= jump_out.shape[0]:
                return (STATUS_JUMP_OVERFLOW, n_jumps, k)
            nrm = math.sqrt(rate)
            if nrm == 0.0:
                return (STATUS_IMPOSSIBLE_JUMP, n_jumps, k)
            for i in range(d):
                psi[i] = phi[i] / nrm
            jump_out[n_jumps] = (k + 1) * dt
            n_jumps += 1
        else:
            dpsi[:] = 0.0
            _matvec(rows, cols, vals, h0_lo, h0_hi, psi, dpsi, -1j * _ONE)
            if has_hxi:
                xd = xi_drive[k]
                _matvec(rows, cols, vals, hx_lo, hx_hi, psi, dpsi, -1j * xd)
                _matvec_dag(rows, cols, vals, hx_lo, hx_hi, psi, dpsi,
                            -1j * np.conj(xd))
            _matvec(rows, cols, vals, cr_lo, cr_hi, psi, dpsi, 0.5 * np.conj(r))
            _matvec_dag(rows, cols, vals, cr_lo, cr_hi, psi, dpsi, -0.5 * r)
            ldlpsi[:] = 0.0
            _matvec_dag(rows, cols, vals, l_lo, l_hi, phi, ldlpsi, _ONE)
            _matvec_dag(rows, cols, vals, sm_lo, sm_hi, phi, ldlpsi, np.conj(r))
            nrm2 = 0.0
            for i in range(d):
                psi[i] += dt * (dpsi[i] + 0.5 * rate * psi[i] - 0.5 * ldlpsi[i])
                nrm2 += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
            inv = 1.0 / math.sqrt(nrm2)
            for i in range(d):
                psi[i] *= inv
    return (STATUS_OK, n_jumps, -1)


@njit(cache=True, nogil=True)
def sse_homodyne_traj(psi, ptr, rows, cols, vals, has_hxi, xi_drive, ratio,
                      normals, dt, stride, obs_out, rate_out, dy_out,
                      sampled_psi):
    d = psi.shape[0]
    n_steps = normals.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_psi.shape[0] > 0
    phi = np.zeros(d, np.complex128)
    dpsi = np.zeros(d, np.complex128)
    ldlpsi = np.zeros(d, np.complex128)
    sqdt = math.sqrt(dt)

    h0_lo, h0_hi = ptr[SSE_H0], ptr[SSE_H0 + 1]
    hx_lo, hx_hi = ptr[SSE_HXI], ptr[SSE_HXI + 1]
    l_lo, l_hi = ptr[SSE_L], ptr[SSE_L + 1]
    sm_lo, sm_hi = ptr[SSE_SM], ptr[SSE_SM + 1]
    cr_lo, cr_hi = ptr[SSE_CROSS], ptr[SSE_CROSS + 1]

    for k in range(n_steps + 1):
        r = ratio[k]
        phi[:] = 0.0
        _matvec(rows, cols, vals, l_lo, l_hi, psi, phi, _ONE)
        _matvec(rows, cols, vals, sm_lo, sm_hi, psi, phi, r)
        expL = 0.0 + 0.0j
        for i in range(d):
            expL += np.conj(psi[i]) * phi[i]
        K = 2.0 * expL.real
        rate_out[k] = K
        if k % stride == 0:
            s_i = k // stride
            for io in range(k_obs):
                o = SSE_OBS0 + io
                obs_out[io, s_i] = _expect(rows, cols, vals, ptr[o], ptr[o + 1], psi)
            if record_states:
                for i in range(d):
                    sampled_psi[s_i, i] = psi[i]
        if k == n_steps:
            break

        dW = normals[k] * sqdt
        dy_out[k] = K * dt + dW
        dpsi[:] = 0.0
        _matvec(rows, cols, vals, h0_lo, h0_hi, psi, dpsi, -1j * _ONE)
        if has_hxi:
            xd = xi_drive[k]
            _matvec(rows, cols, vals, hx_lo, hx_hi, psi, dpsi, -1j * xd)
            _matvec_dag(rows, cols, vals, hx_lo, hx_hi, psi, dpsi,
                        -1j * np.conj(xd))
        _matvec(rows, cols, vals, cr_lo, cr_hi, psi, dpsi, 0.5 * np.conj(r))
        _matvec_dag(rows, cols, vals, cr_lo, cr_hi, psi, dpsi, -0.5 * r)
        ldlpsi[:] = 0.0
        _matvec_dag(rows, cols, vals, l_lo, l_hi, phi, ldlpsi, _ONE)
        _matvec_dag(rows, cols, vals, sm_lo, sm_hi, phi, ldlpsi, np.conj(r))
        eabs2 = expL.real * expL.real + expL.imag * expL.imag
        nrm2 = 0.0
        for i in range(d):
            psi[i] += dt * (dpsi[i] + np.conj(expL) * phi[i]
                            - 0.5 * ldlpsi[i] - 0.5 * eabs2 * psi[i]) \
                + dW * (phi[i] - expL * psi[i])
            nrm2 += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        inv = 1.0 / math.sqrt(nrm2)
        for i in range(d):
            psi[i] *= inv
    return (STATUS_OK, -1)
