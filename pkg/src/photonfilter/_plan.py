"""Precompiled operator tables handed to the trajectory kernels.

The kernels (numba or numpy, see `backend`) take every operator as a packed
COO triplet pool so that one signature serves both backends.  All model
operators here are ladder/number constructions with O(d) nonzeros, which is
what makes the sparse application worthwhile: a full step costs O(d^2)
instead of the O(d^3) of dense matrix products.

Pool slot order for the density-operator (SME) kernels:
    0 G_OFF   off-diagonal part of G = -i H0 - 1/2 sum_k L_k^+ L_k
    1 L       monitored coupling
    2 LDL     L^+ L
    3 LPLD    L + L^+
    4 HXI     drive operator A with H += xi_d(t) A + xi_d*(t) A^+
    5 FB      feedback measurement operator
    6...      unmonitored channels, then recorded observables

For the pure-state (SSE) kernels:
    0 H0      static Hamiltonian on system (x) ancilla
    1 HXI     drive operator, lifted
    2 L       monitored coupling, lifted
    3 SM      sigma_minus on the ancilla slot
    4 CROSS   sigma_plus L, the cascade coupling
    5...      recorded observables (joint-space operators)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert
from .errors import UnsupportedConfigurationError, ValidationError
from .hierarchy import SystemModel
from .pulse import pulse_grids

SME_G_OFF, SME_L, SME_LDL, SME_LPLD, SME_HXI, SME_FB, SME_EXTRA0 = range(7)
SSE_H0, SSE_HXI, SSE_L, SSE_SM, SSE_CROSS, SSE_OBS0 = range(6)


def _pack_ops(ops: list[np.ndarray]):
    """COO-pack a list of dense matrices into (ptr, rows, cols, vals)."""
    ptr = np.zeros(len(ops) + 1, dtype=np.int64)
    rr, cc, vv = [], [], []
    for i, op in enumerate(ops):
        op = np.asarray(op, dtype=complex)
        r, c = np.nonzero(op)
        ptr[i + 1] = ptr[i] + r.size
        rr.append(r.astype(np.int64))
        cc.append(c.astype(np.int64))
        vv.append(op[r, c])
    rows = np.concatenate(rr) if rr else np.zeros(0, np.int64)
    cols = np.concatenate(cc) if cc else np.zeros(0, np.int64)
    vals = np.concatenate(vv) if vv else np.zeros(0, complex)
    return ptr, rows, cols, vals.astype(complex)


def _check_grid(T: float, dt: float, stride: int) -> int:
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if T <= 0:
        raise ValidationError(f"T must be > 0, got {T}")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValidationError(f"T={T} is not an integer number of dt={dt} steps")
    if stride < 1 or n_steps % stride:
        raise ValidationError(
            f"sample stride {stride} must divide the {n_steps} steps"
        )
    return n_steps


@dataclass
class SmePlan:
    """Everything a density-operator trajectory kernel needs, precomputed."""

    dim: int
    g_diag: np.ndarray
    ptr: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    n_extra: int
    has_hxi: int
    has_fb: int
    fb_gen_diag: np.ndarray
    chi: float
    times: np.ndarray
    xi: np.ndarray
    absxi2: np.ndarray
    xi_drive: np.ndarray
    dt: float
    n_steps: int
    stride: int
    k_obs: int

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.stride + 1

    @property
    def sample_times(self) -> np.ndarray:
        return self.times[:: self.stride]

    def static_args(self) -> tuple:
        return (
            self.g_diag, self.ptr, self.rows, self.cols, self.vals,
            self.n_extra, self.has_hxi, self.has_fb, self.fb_gen_diag,
            self.chi, self.xi, self.absxi2, self.xi_drive,
        )


def build_sme_plan(model: SystemModel, pulse, t_start: float, T: float,
                   dt: float, stride: int, obs_ops: list[np.ndarray]) -> SmePlan:
    n_steps = _check_grid(T, dt, stride)
    d = model.dim
    times = t_start + dt * np.arange(n_steps + 1)

    ldl = hilbert.dag(model.monitored_L) @ model.monitored_L
    g_full = -1j * model.h0 - 0.5 * ldl
    for L in model.extra_Ls:
        g_full = g_full - 0.5 * (hilbert.dag(L) @ L)
    g_diag = np.ascontiguousarray(np.diagonal(g_full)).astype(complex)
    g_off = g_full - np.diag(g_diag)

    zeros = np.zeros((d, d), dtype=complex)
    h_xi = model.h_xi if model.h_xi is not None else zeros
    has_fb = int(model.feedback is not None)
    if has_fb:
        fb = model.feedback
        det = np.asarray(fb.detuning_op, dtype=complex)
        fb_gen_diag = np.real(np.diagonal(det)).astype(float)
        if np.max(np.abs(det - np.diag(fb_gen_diag))) > 1e-12:
            raise ValidationError(
                "trajectory kernels support only diagonal feedback detuning operators"
            )
        fb_meas = np.asarray(fb.meas_op, dtype=complex)
        chi = float(fb.chi)
    else:
        fb_gen_diag = np.zeros(d)
        fb_meas = zeros
        chi = 0.0

    ops = [g_off, model.monitored_L, ldl,
           model.monitored_L + hilbert.dag(model.monitored_L),
           h_xi, fb_meas]
    ops.extend(model.extra_Ls)
    ops.extend(np.asarray(o, dtype=complex) for o in obs_ops)
    ptr, rows, cols, vals = _pack_ops(ops)

    xi, absxi2, _ = pulse_grids(pulse, times)
    if model.drive_pulse is not None:
        xi_drive = np.asarray(model.drive_pulse.xi(times), dtype=complex)
    else:
        xi_drive = np.zeros(n_steps + 1, dtype=complex)

    return SmePlan(
        dim=d, g_diag=g_diag, ptr=ptr, rows=rows, cols=cols, vals=vals,
        n_extra=len(model.extra_Ls), has_hxi=int(model.h_xi is not None),
        has_fb=has_fb, fb_gen_diag=fb_gen_diag, chi=chi,
        times=times, xi=xi, absxi2=absxi2, xi_drive=xi_drive,
        dt=dt, n_steps=n_steps, stride=stride, k_obs=len(obs_ops),
    )


@dataclass
class SsePlan:
    """Operator tables for the pure-state kernels on system (x) ancilla."""

    dim: int
    ptr: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    has_hxi: int
    times: np.ndarray
    xi_drive: np.ndarray
    ratio: np.ndarray
    dt: float
    n_steps: int
    stride: int
    k_obs: int

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.stride + 1

    @property
    def sample_times(self) -> np.ndarray:
        return self.times[:: self.stride]

    def static_args(self) -> tuple:
        return (self.ptr, self.rows, self.cols, self.vals,
                self.has_hxi, self.xi_drive, self.ratio)


def lift_system(op: np.ndarray) -> np.ndarray:
    """System operator on the joint system (x) ancilla space."""
    return np.kron(np.asarray(op, dtype=complex), np.eye(2, dtype=complex))


def lift_ancilla(op2: np.ndarray, sys_dim: int) -> np.ndarray:
    return np.kron(np.eye(sys_dim, dtype=complex), np.asarray(op2, dtype=complex))


def build_sse_plan(model: SystemModel, pulse, t_start: float, T: float,
                   dt: float, stride: int, obs_ops: list[np.ndarray]) -> SsePlan:
    if model.extra_Ls:
        raise UnsupportedConfigurationError(
            "the pure-state representation cannot carry unmonitored channels; "
            "use the density-operator filter for such models"
        )
    n_steps = _check_grid(T, dt, stride)
    ds = model.dim
    times = t_start + dt * np.arange(n_steps + 1)

    h0 = lift_system(model.h0)
    h_xi = lift_system(model.h_xi) if model.h_xi is not None else np.zeros_like(h0)
    L = lift_system(model.monitored_L)
    sm = lift_ancilla(hilbert.sigma_minus(), ds)
    cross = lift_ancilla(hilbert.sigma_plus(), ds) @ L

    ops = [h0, h_xi, L, sm, cross]
    ops.extend(np.asarray(o, dtype=complex) for o in obs_ops)
    ptr, rows, cols, vals = _pack_ops(ops)

    xi, _, ratio = pulse_grids(pulse, times)
    if model.drive_pulse is not None:
        xi_drive = np.asarray(model.drive_pulse.xi(times), dtype=complex)
    else:
        xi_drive = np.zeros(n_steps + 1, dtype=complex)

    return SsePlan(
        dim=2 * ds, ptr=ptr, rows=rows, cols=cols, vals=vals,
        has_hxi=int(model.h_xi is not None),
        times=times, xi_drive=xi_drive, ratio=ratio,
        dt=dt, n_steps=n_steps, stride=stride, k_obs=len(obs_ops),
    )
