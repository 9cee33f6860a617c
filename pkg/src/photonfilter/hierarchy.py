"""The four-component operator hierarchy and its deterministic dynamics.

A system driven by a one-photon wavepacket is not closed at the level of a
single density operator: the physical state r11 couples to three auxiliary
operators (r00, r01, r10) through the pulse amplitude.  This module holds
the state container, the unconditional right-hand side, an RK4 integrator,
the closed-form photon-number curve for the decaying-exponential pulse, and
the equivalent coherently-driven reference model.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import hilbert
from .errors import (
    DimensionError,
    NumericalInstabilityError,
    PhysicalityError,
    ValidationError,
)
from .hilbert import ModeLayout, dag

# component order inside Hierarchy.data
I00, I01, I10, I11 = 0, 1, 2, 3


@dataclass(frozen=True)
class Feedback:
    """Deterministic detuning feedback: H gains delta(t) * detuning_op with
    delta(t) = -chi * Re tr[meas_op r11(t)], re-evaluated at every step."""

    chi: float
    meas_op: np.ndarray
    detuning_op: np.ndarray

    def delta(self, h: "Hierarchy") -> float:
        return -self.chi * float(np.real(np.sum(h.r11 * self.meas_op.T)))


@dataclass(frozen=True)
class SystemModel:
    """System operators for one monitored channel plus extra decay channels.

    The Hamiltonian is assembled from a static part `h0`, an optional drive
    term ``xi_d(t) h_xi + h.c.`` fed by `drive_pulse`, and an optional
    state-dependent `feedback` detuning.
    """

    layout: ModeLayout
    h0: np.ndarray
    monitored_L: np.ndarray
    extra_Ls: tuple[np.ndarray, ...] = ()
    h_xi: np.ndarray | None = None
    drive_pulse: object | None = None
    feedback: Feedback | None = None

    def __post_init__(self):
        d = self.layout.dim
        for name, op in [("h0", self.h0), ("monitored_L", self.monitored_L)] + [
            (f"extra_Ls[{i}]", L) for i, L in enumerate(self.extra_Ls)
        ]:
            if np.shape(op) != (d, d):
                raise DimensionError(f"{name} must be {d}x{d}, got {np.shape(op)}")
        res = hilbert.herm_residue(self.h0)
        if res > hilbert.HERM_TOL:
            raise PhysicalityError(f"h0 Hermiticity residue {res:.3e}")
        if (self.h_xi is None) != (self.drive_pulse is None):
            raise ValidationError("h_xi and drive_pulse must be given together")

    @property
    def dim(self) -> int:
        return self.layout.dim

    def hamiltonian(self, t: float, h: "Hierarchy | None" = None,
                    fb_delta: float | None = None) -> np.ndarray:
        """Full Hamiltonian at time t (Hermitian).

        The feedback detuning can be passed explicitly via `fb_delta`,
        which the integrators use to freeze it across one step.
        """
        out = self.h0
        if self.h_xi is not None:
            xd = complex(self.drive_pulse.xi(t))
            out = out + xd * self.h_xi + np.conj(xd) * dag(self.h_xi)
        if self.feedback is not None:
            if fb_delta is None:
                if h is None:
                    raise ValidationError("feedback model needs the hierarchy state")
                fb_delta = self.feedback.delta(h)
            out = out + fb_delta * self.feedback.detuning_op
        return out


@dataclass
class Hierarchy:
    """State of the four-component filter: data[k] = r00, r01, r10, r11."""

    data: np.ndarray  # (4, d, d) complex
    t: float = 0.0
    conditional_available: bool = True

    @property
    def r00(self) -> np.ndarray:
        return self.data[I00]

    @property
    def r01(self) -> np.ndarray:
        return self.data[I01]

    @property
    def r10(self) -> np.ndarray:
        return self.data[I10]

    @property
    def r11(self) -> np.ndarray:
        return self.data[I11]

    @property
    def dim(self) -> int:
        return self.data.shape[-1]

    def copy(self) -> "Hierarchy":
        return Hierarchy(self.data.copy(), self.t, self.conditional_available)

    def expect_11(self, op: np.ndarray) -> complex:
        """tr[r11 op], the physical expectation value."""
        return complex(np.sum(self.r11 * np.asarray(op).T))

    def validate(self, tol: float = 1e-6) -> None:
        """Raise if the joint invariants are violated beyond `tol`."""
        tr = complex(np.trace(self.r11))
        if not np.isfinite(self.data).all():
            raise NumericalInstabilityError(f"non-finite hierarchy at t={self.t:g}")
        if abs(tr - 1.0) > tol:
            raise NumericalInstabilityError(
                f"tr r11 = {tr:.8g} deviates from 1 beyond {tol:g} at t={self.t:g}"
            )
        for name, m in (("r11", self.r11), ("r00", self.r00)):
            res = hilbert.herm_residue(m)
            if res > tol:
                raise NumericalInstabilityError(
                    f"{name} Hermiticity residue {res:.3e} at t={self.t:g}"
                )
        pair = float(np.max(np.abs(self.r10 - dag(self.r01))))
        if pair > tol:
            raise NumericalInstabilityError(
                f"r10 != r01^dag by {pair:.3e} at t={self.t:g}"
            )


def initial_hierarchy(rho0: np.ndarray) -> Hierarchy:
    """Initial filter state for an incoming one-photon wavepacket.

    r11 = r00 = rho0 and r01 = r10 = 0: the reference component starts as a
    full copy so that its unit trace drives the r01 equation.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    hilbert.check_density(rho0)
    d = rho0.shape[0]
    data = np.zeros((4, d, d), dtype=complex)
    data[I00] = rho0
    data[I11] = rho0
    return Hierarchy(data, t=0.0)


def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Lindblad dissipator D[L] rho = L rho L^+ - 1/2 {L^+ L, rho}."""
    Lr = L @ rho
    LdL = dag(L) @ L
    return Lr @ dag(L) - 0.5 * (LdL @ rho + rho @ LdL)


def lindblad_rhs(model: SystemModel, t: float, rho: np.ndarray,
                 h: Hierarchy | None = None, fb_delta: float | None = None) -> np.ndarray:
    """Liouvillian -i[H, rho] + sum_k D[L_k] rho over all channels."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise DimensionError(f"rho shape {rho.shape} vs model dim {model.dim}")
    H = model.hamiltonian(t, h, fb_delta)
    out = -1j * (H @ rho - rho @ H)
    out += dissipator(model.monitored_L, rho)
    for L in model.extra_Ls:
        out += dissipator(L, rho)
    return out


def hierarchy_rhs(model: SystemModel, pulse, t: float, h: Hierarchy,
                  fb_delta: float | None = None) -> np.ndarray:
    """Unconditional time derivative of all four components, shape (4, d, d)."""
    xi = complex(pulse.xi(t))
    L = model.monitored_L
    Ld = dag(L)
    out = np.empty_like(h.data)
    for k in (I00, I01, I10, I11):
        out[k] = lindblad_rhs(model, t, h.data[k], h, fb_delta)
    r00, r01, r10 = h.r00, h.r01, h.r10
    out[I11] += (h.data[I01] @ Ld - Ld @ r01) * xi + (L @ r10 - r10 @ L) * np.conj(xi)
    out[I01] += (L @ r00 - r00 @ L) * np.conj(xi)
    out[I10] += (r00 @ Ld - Ld @ r00) * xi
    return out


def step_me(model: SystemModel, pulse, h: Hierarchy, dt: float) -> Hierarchy:
    """One classical RK4 step of the unconditional hierarchy.

    A state-dependent feedback detuning is frozen at its start-of-step
    value; genuine time dependence (the pulse) is evaluated at substeps.
    """
    if dt <= 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    fb_delta = model.feedback.delta(h) if model.feedback is not None else None
    t = h.t

    def rhs(ts, data):
        return hierarchy_rhs(model, pulse, ts, Hierarchy(data, ts), fb_delta)

    y = h.data
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    out = Hierarchy(y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), t + dt,
                    h.conditional_available)
    out.validate(tol=1e-6)
    return out


def closed_form_n11(gamma: float, kappa: float, t, t0: float = 0.0):
    """Exact mean photon number for the exponential pulse into a bare cavity.

    n11(tau) = 4 gamma kappa e^{-gamma tau} (e^{(gamma-kappa) tau / 2} - 1)^2
               / (gamma - kappa)^2,  tau = t - t0 >= 0,
    with the degenerate gamma = kappa limit kappa^2 tau^2 e^{-kappa tau}.
    """
    if gamma <= 0 or kappa <= 0:
        raise ValidationError("rates must be positive")
    t = np.asarray(t, dtype=float)
    tau = np.maximum(t - t0, 0.0)
    if abs(gamma - kappa) / kappa < 1e-6:
        out = kappa**2 * tau**2 * np.exp(-kappa * tau)
    else:
        # expm1 keeps the near-degenerate region free of cancellation
        out = (
            4.0 * gamma * kappa
            * np.exp(-gamma * tau)
            * np.expm1(0.5 * (gamma - kappa) * tau) ** 2
            / (gamma - kappa) ** 2
        )
    out = np.where(np.asarray(t) >= t0, out, 0.0)
    return out if out.ndim else float(out)


def coherent_reference_model(kappa: float, pulse, dim: int = 15) -> SystemModel:
    """Cavity driven by the equivalent coherent field eps(t) = i sqrt(kappa) xi(t).

    The pulse enters only through the Hamiltonian
    H(t) = i sqrt(kappa) (xi(t) a^+ - xi*(t) a); run the steppers with a
    ZeroPulse so that no hierarchy cross terms appear.
    """
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    layout = ModeLayout((dim,))
    a, ad = hilbert.ladder_ops(dim)
    return SystemModel(
        layout=layout,
        h0=np.zeros((dim, dim), dtype=complex),
        monitored_L=np.sqrt(kappa) * a,
        h_xi=1j * np.sqrt(kappa) * ad,
        drive_pulse=pulse,
    )
