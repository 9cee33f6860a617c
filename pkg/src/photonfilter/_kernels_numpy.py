"""Pure-numpy trajectory kernels (the fallback backend).

Reference implementations of the per-trajectory integration loops, written
with dense matrix products for readability.  The numba twins in
`_kernels_numba` follow the same algorithms with sparse index arithmetic;
signatures and semantics are identical, and the test suite holds the two
backends against each other.

State layout inside the density-operator kernels: `hier` has shape
(3, d, d) holding (r00, r01, r11).  The fourth component r10 equals r01^+
exactly under both the drift and the jump maps, so it is never stored.
"""

from __future__ import annotations

import math

import numpy as np

from ._plan import (
    SME_G_OFF, SME_L, SME_LDL, SME_LPLD, SME_HXI, SME_FB, SME_EXTRA0,
    SSE_H0, SSE_HXI, SSE_L, SSE_SM, SSE_CROSS, SSE_OBS0,
)

STATUS_OK = 0
STATUS_STEP_SIZE = 1
STATUS_CORRUPTED = 2
STATUS_UNSTABLE = 3
STATUS_JUMP_OVERFLOW = 4
STATUS_IMPOSSIBLE_JUMP = 5

NU_NEGATIVE_TOL = -1e-9
K_IMAG_TOL = 1e-6
JUMP_PROB_CAP = 0.1
TRACE_FLOOR = 0.5


def _dense(ptr, rows, cols, vals, i, d):
    lo, hi = ptr[i], ptr[i + 1]
    m = np.zeros((d, d), dtype=complex)
    m[rows[lo:hi], cols[lo:hi]] = vals[lo:hi]
    return m


def _unpack_sme(hier, g_diag, ptr, rows, cols, vals, n_extra, k_obs):
    d = hier.shape[1]
    G_off = _dense(ptr, rows, cols, vals, SME_G_OFF, d)
    L = _dense(ptr, rows, cols, vals, SME_L, d)
    LdL = _dense(ptr, rows, cols, vals, SME_LDL, d)
    LpLd = _dense(ptr, rows, cols, vals, SME_LPLD, d)
    A = _dense(ptr, rows, cols, vals, SME_HXI, d)
    FB = _dense(ptr, rows, cols, vals, SME_FB, d)
    extras = [_dense(ptr, rows, cols, vals, SME_EXTRA0 + e, d) for e in range(n_extra)]
    obs = [_dense(ptr, rows, cols, vals, SME_EXTRA0 + n_extra + i, d)
           for i in range(k_obs)]
    G0 = G_off + np.diag(g_diag)
    return G0, L, LdL, LpLd, A, FB, extras, obs


def _step_generator(G0, A, fb_diag, has_hxi, has_fb, chi, FB, r11, xd):
    """G(t) = G0 - i (drive + feedback detuning) at the current step."""
    G = G0
    if has_hxi:
        G = G + (-1j) * (xd * A + np.conj(xd) * A.conj().T)
    if has_fb:
        delta = -chi * float(np.real(np.trace(FB @ r11)))
        G = G + (-1j * delta) * np.diag(fb_diag)
    return G


def _residues(hier, resid_out):
    tr = abs(float(np.real(np.trace(hier[2]))) - 1.0)
    h11 = float(np.max(np.abs(hier[2] - hier[2].conj().T)))
    h00 = float(np.max(np.abs(hier[0] - hier[0].conj().T)))
    resid_out[0] = max(resid_out[0], tr)
    resid_out[1] = max(resid_out[1], h11, h00)


def sme_photodetect_traj(hier, g_diag, ptr, rows, cols, vals,
                         n_extra, has_hxi, has_fb, fb_gen_diag, chi,
                         xi, absxi2, xi_drive, uniforms, dt, stride,
                         obs_out, tr00_out, nu_out, jump_out, resid_out,
                         sampled_r11):
    """Photodetection filter trajectory; Bernoulli-thinned jumps.

    Between detections the state follows the deterministic no-click drift
    (the compensated form of the jump filter); a detection replaces the
    hierarchy by the shared jump map and the whole state is renormalized by
    tr r11 after every step.
    """
    n_steps = uniforms.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_r11.shape[0] > 0
    G0, L, LdL, LpLd, A, FB, extras, obs = _unpack_sme(
        hier, g_diag, ptr, rows, cols, vals, n_extra, k_obs)
    Ld = L.conj().T
    n_jumps = 0

    for k in range(n_steps + 1):
        r00, r01, r11 = hier[0], hier[1], hier[2]
        r10 = r01.conj().T
        xk = xi[k]
        x2 = absxi2[k]
        nu = complex(
            np.trace(LdL @ r11) + np.conj(xk) * np.trace(L @ r10)
            + xk * np.trace(Ld @ r01) + x2 * np.trace(r00)
        ).real
        nu_out[k] = nu
        if k % stride == 0:
            s = k // stride
            tr00_out[s] = float(np.real(np.trace(r00)))
            for i in range(k_obs):
                obs_out[i, s] = complex(np.trace(obs[i] @ r11))
            if record_states:
                sampled_r11[s] = r11
        if k == n_steps:
            break
        if nu < NU_NEGATIVE_TOL:
            return (STATUS_CORRUPTED, n_jumps, k)
        nu = max(nu, 0.0)
        if nu * dt >= JUMP_PROB_CAP:
            return (STATUS_STEP_SIZE, n_jumps, k)

        if uniforms[k] < nu * dt:
            if n_jumps >= jump_out.shape[0]:
                return (STATUS_JUMP_OVERFLOW, n_jumps, k)
            new00 = L @ r00 @ Ld
            new01 = L @ r01 @ Ld + np.conj(xk) * (L @ r00)
            M = np.conj(xk) * (L @ r10)
            new11 = L @ r11 @ Ld + M + M.conj().T + x2 * r00
            hier[0] = new00 / nu
            hier[1] = new01 / nu
            hier[2] = new11 / nu
            jump_out[n_jumps] = (k + 1) * dt
            n_jumps += 1
        else:
            G = _step_generator(G0, A, fb_gen_diag, has_hxi, has_fb, chi,
                                FB, r11, xi_drive[k])
            drift = np.empty_like(hier)
            for c in range(3):
                rc = hier[c]
                drift[c] = G @ rc + rc @ G.conj().T + nu * rc
                for E in extras:
                    drift[c] += E @ rc @ E.conj().T
            Mc = Ld @ r01
            drift[2] += -xk * Mc - np.conj(xk) * Mc.conj().T - x2 * r00
            drift[1] += -np.conj(xk) * (r00 @ L)
            hier += dt * drift

        tr = float(np.real(np.trace(hier[2])))
        if not (TRACE_FLOOR < tr < 2.0):
            return (STATUS_UNSTABLE, n_jumps, k)
        hier *= 1.0 / tr
        _residues(hier, resid_out)
    return (STATUS_OK, n_jumps, -1)


def sme_homodyne_traj(hier, g_diag, ptr, rows, cols, vals,
                      n_extra, has_hxi, has_fb, fb_gen_diag, chi,
                      xi, absxi2, xi_drive, normals, dt, stride,
                      obs_out, tr00_out, k_out, dy_out, resid_out,
                      sampled_r11):
    """Diffusive (homodyne) filter trajectory, Euler-Maruyama."""
    n_steps = normals.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_r11.shape[0] > 0
    G0, L, LdL, LpLd, A, FB, extras, obs = _unpack_sme(
        hier, g_diag, ptr, rows, cols, vals, n_extra, k_obs)
    Ld = L.conj().T
    sqdt = math.sqrt(dt)

    for k in range(n_steps + 1):
        r00, r01, r11 = hier[0], hier[1], hier[2]
        xk = xi[k]
        x2 = absxi2[k]
        quad = complex(np.trace(LpLd @ r11))
        K = quad.real + 2.0 * (xk * complex(np.trace(r01))).real
        k_out[k] = K
        if k % stride == 0:
            s = k // stride
            tr00_out[s] = float(np.real(np.trace(r00)))
            for i in range(k_obs):
                obs_out[i, s] = complex(np.trace(obs[i] @ r11))
            if record_states:
                sampled_r11[s] = r11
        if k == n_steps:
            break
        if abs(quad.imag) >= K_IMAG_TOL:
            return (STATUS_CORRUPTED, k)

        dW = normals[k] * sqdt
        dy_out[k] = K * dt + dW

        G = _step_generator(G0, A, fb_gen_diag, has_hxi, has_fb, chi,
                            FB, r11, xi_drive[k])
        drift = np.empty_like(hier)
        noise = np.empty_like(hier)
        for c in range(3):
            rc = hier[c]
            drift[c] = G @ rc + rc @ G.conj().T + L @ rc @ Ld
            for E in extras:
                drift[c] += E @ rc @ E.conj().T
            noise[c] = L @ rc + rc @ Ld - K * rc
        Mc = xk * (r01 @ Ld - Ld @ r01)
        drift[2] += Mc + Mc.conj().T
        drift[1] += np.conj(xk) * (L @ r00 - r00 @ L)
        M = xk * r01
        noise[2] += M + M.conj().T
        noise[1] += np.conj(xk) * r00
        hier += dt * drift + dW * noise

        tr = float(np.real(np.trace(hier[2])))
        if not (TRACE_FLOOR < tr < 2.0):
            return (STATUS_UNSTABLE, k)
        hier *= 1.0 / tr
        _residues(hier, resid_out)
    return (STATUS_OK, -1)


def _unpack_sse(psi, ptr, rows, cols, vals, k_obs):
    d = psi.shape[0]
    H0 = _dense(ptr, rows, cols, vals, SSE_H0, d)
    A = _dense(ptr, rows, cols, vals, SSE_HXI, d)
    L = _dense(ptr, rows, cols, vals, SSE_L, d)
    SM = _dense(ptr, rows, cols, vals, SSE_SM, d)
    C = _dense(ptr, rows, cols, vals, SSE_CROSS, d)
    obs = [_dense(ptr, rows, cols, vals, SSE_OBS0 + i, d) for i in range(k_obs)]
    return H0, A, L, SM, C, obs


def _sse_ht_psi(H0, A, C, psi, xd, r, has_hxi):
    """H_T |psi> with the cascade coupling (i/2)(r* sigma+ L - r L+ sigma-)."""
    out = H0 @ psi
    if has_hxi:
        out += xd * (A @ psi) + np.conj(xd) * (A.conj().T @ psi)
    out += 0.5j * (np.conj(r) * (C @ psi) - r * (C.conj().T @ psi))
    return out


def sse_photodetect_traj(psi, ptr, rows, cols, vals, has_hxi, xi_drive, ratio,
                         uniforms, dt, stride, obs_out, rate_out, jump_out,
                         sampled_psi):
    """Pure-state photodetection trajectory on system (x) ancilla."""
    n_steps = uniforms.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_psi.shape[0] > 0
    H0, A, L, SM, C, obs = _unpack_sse(psi, ptr, rows, cols, vals, k_obs)
    n_jumps = 0

    for k in range(n_steps + 1):
        r = ratio[k]
        phi = L @ psi + r * (SM @ psi)  # L_T |psi>
        rate = float(np.real(np.vdot(phi, phi)))
        rate_out[k] = rate
        if k % stride == 0:
            s = k // stride
            for i in range(k_obs):
                obs_out[i, s] = complex(np.vdot(psi, obs[i] @ psi))
            if record_states:
                sampled_psi[s] = psi
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
            psi[:] = phi / nrm
            jump_out[n_jumps] = (k + 1) * dt
            n_jumps += 1
        else:
            # L_T^+ L_T |psi>
            ldl_psi = L.conj().T @ phi + np.conj(r) * (SM.conj().T @ phi)
            dpsi = (-1j) * _sse_ht_psi(H0, A, C, psi, xi_drive[k], r, has_hxi)
            dpsi += 0.5 * rate * psi - 0.5 * ldl_psi
            psi += dt * dpsi
            psi /= np.linalg.norm(psi)
    return (STATUS_OK, n_jumps, -1)


def sse_homodyne_traj(psi, ptr, rows, cols, vals, has_hxi, xi_drive, ratio,
                      normals, dt, stride, obs_out, rate_out, dy_out,
                      sampled_psi):
    """Pure-state homodyne trajectory on system (x) ancilla."""
    n_steps = normals.shape[0]
    k_obs = obs_out.shape[0]
    record_states = sampled_psi.shape[0] > 0
    H0, A, L, SM, C, obs = _unpack_sse(psi, ptr, rows, cols, vals, k_obs)
    sqdt = math.sqrt(dt)

    for k in range(n_steps + 1):
        r = ratio[k]
        phi = L @ psi + r * (SM @ psi)
        expL = complex(np.vdot(psi, phi))  # <L_T>
        K = 2.0 * expL.real
        rate_out[k] = K
        if k % stride == 0:
            s = k // stride
            for i in range(k_obs):
                obs_out[i, s] = complex(np.vdot(psi, obs[i] @ psi))
            if record_states:
                sampled_psi[s] = psi
        if k == n_steps:
            break

        dW = normals[k] * sqdt
        dy_out[k] = K * dt + dW
        ldl_psi = L.conj().T @ phi + np.conj(r) * (SM.conj().T @ phi)
        dpsi = (-1j) * _sse_ht_psi(H0, A, C, psi, xi_drive[k], r, has_hxi)
        dpsi += np.conj(expL) * phi - 0.5 * ldl_psi - 0.5 * abs(expL) ** 2 * psi
        psi += dt * dpsi + dW * (phi - expL * psi)
        psi /= np.linalg.norm(psi)
    return (STATUS_OK, -1)
