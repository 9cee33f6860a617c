"""Truncated-Fock-space operator and state algebra.

Everything downstream works with dense complex numpy arrays: operators are
square ``(d, d)`` matrices, kets are ``(d,)`` vectors, density operators are
``(d, d)`` matrices.  Multi-mode systems use Kronecker products with a fixed
slot order: mode a first, then mode b, then (optionally) a two-level ancilla
whose basis is ordered (excited, ground).

Dimensions stay small (<= ~100), so dense algebra is both simpler and faster
than any sparse machinery here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PhysicalityError, TruncationError

HERM_TOL = 1e-10
TRACE_TOL = 1e-8
TOP_LEVEL_WARN = 1e-4
TOP_LEVEL_ERROR = 1e-2

ANCILLA = "ancilla"
ANCILLA_DIM = 2
# ancilla basis order: index 0 = excited, 1 = ground
EXCITED, GROUND = 0, 1


@dataclass(frozen=True)
class ModeLayout:
    """Ordered truncation dimensions of the tensor factors.

    ``dims`` lists the per-mode Fock truncations; ``ancilla=True`` appends a
    two-level slot after all modes.
    """

    dims: tuple[int, ...]
    ancilla: bool = False

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 1:
            raise DimensionError("layout needs at least one mode")
        if any(d < 1 for d in dims):
            raise DimensionError(f"every mode dimension must be >= 1, got {dims}")

    @property
    def slot_dims(self) -> tuple[int, ...]:
        return self.dims + ((ANCILLA_DIM,) if self.ancilla else ())

    @property
    def dim(self) -> int:
        return math.prod(self.slot_dims)

    def slot_index(self, slot) -> int:
        if slot == ANCILLA:
            if not self.ancilla:
                raise DimensionError("layout has no ancilla slot")
            return len(self.dims)
        slot = int(slot)
        if not 0 <= slot < len(self.dims):
            raise DimensionError(f"slot {slot} out of range for {len(self.dims)} modes")
        return slot

    def with_ancilla(self) -> "ModeLayout":
        return ModeLayout(self.dims, ancilla=True)


def ladder_ops(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation operators on a `dim`-level Fock space."""
    if dim < 2:
        raise DimensionError(f"ladder operators need dim >= 2, got {dim}")
    a = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        a[k - 1, k] = math.sqrt(k)
    return a, a.conj().T


def number_op(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def sigma_minus() -> np.ndarray:
    """|g><e| on the (excited, ground)-ordered ancilla."""
    sm = np.zeros((2, 2), dtype=complex)
    sm[GROUND, EXCITED] = 1.0
    return sm


def sigma_plus() -> np.ndarray:
    return sigma_minus().conj().T


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def embed(op: np.ndarray, slot, layout: ModeLayout) -> np.ndarray:
    """Kronecker-embed `op` acting on one slot, identities elsewhere."""
    op = np.asarray(op, dtype=complex)
    idx = layout.slot_index(slot)
    slot_dims = layout.slot_dims
    if op.shape != (slot_dims[idx], slot_dims[idx]):
        raise DimensionError(
            f"operator shape {op.shape} does not match slot dim {slot_dims[idx]}"
        )
    out = np.eye(1, dtype=complex)
    for i, d in enumerate(slot_dims):
        out = np.kron(out, op if i == idx else np.eye(d, dtype=complex))
    return out


def expectation(state: np.ndarray, op: np.ndarray) -> complex:
    """tr[rho op] for a density matrix, <psi|op|psi> for a ket."""
    state = np.asarray(state)
    op = np.asarray(op)
    if state.ndim == 1:
        if op.shape != (state.size, state.size):
            raise DimensionError(f"op shape {op.shape} vs ket dim {state.size}")
        return complex(np.vdot(state, op @ state))
    if state.shape != op.shape:
        raise DimensionError(f"op shape {op.shape} vs state shape {state.shape}")
    # tr[rho op] without forming the product matrix
    return complex(np.sum(state * op.T))


def vacuum_ket(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


def fock_ket(n: int, dim: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise DimensionError(f"Fock level {n} out of range for dim {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def coherent_ket(alpha: complex, dim: int) -> np.ndarray:
    """Truncated coherent state, renormalized.

    Raises TruncationError when the discarded tail is too heavy for the
    requested dimension (top-level population above 1e-6).
    """
    if dim < 1:
        raise DimensionError("dim must be >= 1")
    alpha = complex(alpha)
    amps = np.empty(dim, dtype=complex)
    amps[0] = 1.0
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    amps *= math.exp(-0.5 * abs(alpha) ** 2)
    top = abs(amps[-1]) ** 2
    if dim > 1 and top > 1e-6:
        needed = _coherent_dim_for(alpha)
        raise TruncationError(
            f"coherent amplitude |alpha|={abs(alpha):.3g} needs dim >= {needed}, "
            f"got {dim} (top-level population {top:.2e})"
        )
    return amps / np.linalg.norm(amps)


def _coherent_dim_for(alpha: complex, tol: float = 1e-8) -> int:
    """Smallest truncation keeping the Poisson tail weight below `tol`."""
    lam = abs(alpha) ** 2
    term = math.exp(-lam)
    cum = term
    n = 0
    while 1.0 - cum > tol and n < 10_000:
        n += 1
        term *= lam / n
        cum += term
    return n + 2  # one spare level above the last populated one


def top_level_population(state: np.ndarray, layout: ModeLayout) -> np.ndarray:
    """Population of the highest Fock level of every mode slot.

    Used as the truncation audit: > 1e-4 deserves a warning, > 1e-2 means
    the result cannot be trusted.
    """
    state = np.asarray(state)
    slot_dims = layout.slot_dims
    if state.ndim == 1:
        probs = np.abs(state) ** 2
    else:
        probs = np.real(np.diagonal(state)).copy()
    probs = probs.reshape(slot_dims)
    out = np.empty(len(layout.dims))
    for i in range(len(layout.dims)):
        out[i] = np.sum(np.take(probs, -1, axis=i))
    return out


def herm_residue(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.conj().T)))


def check_density(rho: np.ndarray, tol_herm: float = HERM_TOL,
                  tol_trace: float = TRACE_TOL) -> None:
    """Validate Hermiticity and unit trace of a physical density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    res = herm_residue(rho)
    if res > tol_herm:
        raise PhysicalityError(f"Hermiticity residue {res:.3e} > {tol_herm:g}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > tol_trace:
        raise PhysicalityError(f"trace {tr:.6g} deviates from 1 by > {tol_trace:g}")


def wigner(rho: np.ndarray, xs: np.ndarray, ps: np.ndarray) -> np.ndarray:
    """Wigner function W(x, p) of a density matrix on a rectangular grid.

    Convention: hbar = 1, alpha = (x + i p)/sqrt(2), normalized so that
    integral of W over the plane is 1 and the vacuum gives W(0,0) = 1/pi.
    Evaluated with the exact displaced-parity (Laguerre) expressions of the
    truncated Fock basis.  Returns shape (len(xs), len(ps)).
    """
    rho = np.asarray(rho, dtype=complex)
    check_density(rho)
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ps))):
        raise ValueError("grid must be finite")
    dim = rho.shape[0]
    alpha = (xs[:, None] + 1j * ps[None, :]) / math.sqrt(2.0)
    y = 4.0 * np.abs(alpha) ** 2
    env = np.exp(-0.5 * y) / math.pi

    total = np.zeros_like(y, dtype=complex)
    for k in range(dim):  # k = n - m offset of the diagonal
        # (2 alpha)^k / sqrt(k!), shared by the whole diagonal
        diag_factor = np.ones_like(alpha)
        for j in range(1, k + 1):
            diag_factor = diag_factor * (2.0 * alpha) / math.sqrt(j)
        weight = 2.0 if k > 0 else 1.0
        # generalized Laguerre recurrence L_m^(k)(y) over m, together with
        # the scalar ratio sqrt(m! k! / (m+k)!)
        lm_prev = np.zeros_like(y)
        lm = np.ones_like(y)
        ratio = 1.0
        for m in range(dim - k):
            n = m + k
            if m >= 1:
                lm, lm_prev = (
                    ((2 * m - 1 + k - y) * lm - (m - 1 + k) * lm_prev) / m,
                    lm,
                )
                ratio *= math.sqrt(m / (m + k))
            sign = -1.0 if m % 2 else 1.0
            total += (weight * sign * ratio) * rho[m, n] * diag_factor * lm
    return np.real(total) * env
