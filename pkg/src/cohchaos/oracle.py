"""Exact truncated-basis evolution of the oscillator-spin model.

This is the ground truth the mean-field machinery is checked against:
states live on the product basis |n> (x) |j,-j+k| with the spin index
fastest, the Hamiltonian is assembled sparsely, and evolution uses a dense
eigendecomposition below a dimension threshold and Krylov-free sparse
exponential action above it.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammainc

from .algebra import (
    HEISENBERG,
    CohChaosError,
    TruncationError,
    boson_operators,
    displaced_basis_vector,
    spin,
    spin_matrices,
)
from .model import MaserParams
from .dynamics import ProductState

_DENSE_LIMIT = 3000


class DimensionError(CohChaosError):
    """Requested Hilbert space exceeds the configured cap."""


@dataclass(frozen=True)
class HilbertConfig:
    """Truncated product space: Fock states 0..n_max and a spin of magnitude j."""

    n_max: int
    j: float
    dimension_cap: int = 20000

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        spin(self.j)
        if self.dim > self.dimension_cap:
            raise DimensionError(
                f"dimension {self.dim} exceeds cap {self.dimension_cap} "
                f"(n_max = {self.n_max}, j = {self.j})"
            )

    @property
    def spin_dim(self) -> int:
        return round(2.0 * self.j) + 1

    @property
    def dim(self) -> int:
        return (self.n_max + 1) * self.spin_dim


def recommended_n_max(x: complex) -> int:
    """Truncation policy |x|^2 + 8|x| + 20 for a coherent field label x."""
    r = abs(x)
    return int(math.ceil(r * r + 8.0 * r + 20.0))


def hilbert_for_labels(labels, j: float, dimension_cap: int = 20000, n_max: int | None = None) -> HilbertConfig:
    """Config sized for the given field labels; raises a requested n_max with a warning if low."""
    need = max(recommended_n_max(x) for x in labels)
    if n_max is None:
        n_max = need
    elif n_max < need:
        warnings.warn(f"n_max raised from {n_max} to {need} to fit the field labels", stacklevel=2)
        n_max = need
    return HilbertConfig(n_max=n_max, j=j, dimension_cap=dimension_cap)


@dataclass(frozen=True)
class OracleState:
    """Normalized amplitude vector on a HilbertConfig basis."""

    amplitudes: np.ndarray
    config: HilbertConfig
    truncation_deficit: float = 0.0

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.config.dim,):
            raise ValueError(f"amplitudes shape {amps.shape} does not match dimension {self.config.dim}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def build_hamiltonian_matrix(p: MaserParams, cfg: HilbertConfig) -> sp.csr_matrix:
    """Sparse matrix of the model on the product basis (spin index fastest)."""
    a_dense, ad_dense, num_dense = boson_operators(cfg.n_max + 1)
    jz_dense, jp_dense, jm_dense = spin_matrices(cfg.j)
    a = sp.csr_matrix(a_dense)
    ad = sp.csr_matrix(ad_dense)
    num = sp.csr_matrix(num_dense)
    jz = sp.csr_matrix(jz_dense)
    jp = sp.csr_matrix(jp_dense)
    jm = sp.csr_matrix(jm_dense)
    eye_f = sp.identity(cfg.n_max + 1, dtype=complex, format="csr")
    eye_s = sp.identity(cfg.spin_dim, dtype=complex, format="csr")
    root_j = math.sqrt(p.j)
    h = (
        p.omega * sp.kron(num, eye_s)
        + p.epsilon * sp.kron(eye_f, jz)
        + (p.g / root_j) * (sp.kron(ad, jm) + sp.kron(a, jp))
        + (p.g_prime / root_j) * (sp.kron(ad, jp) + sp.kron(a, jm))
    ).tocsr()
    residual = abs(h - h.getH()).max()
    scale = max(1.0, abs(h).max())
    if residual > 1e-12 * scale:
        raise CohChaosError(f"assembled Hamiltonian has hermiticity residual {residual:.3e}")
    return h


class ExactEvolver:
    """Reusable propagator for one Hamiltonian matrix.

    Below _DENSE_LIMIT dimensions the matrix is diagonalized once and every
    time is then cheap; above it each call applies the sparse exponential.
    """

    def __init__(self, h_matrix: sp.spmatrix, dense_limit: int = _DENSE_LIMIT):
        self._h = h_matrix.tocsr()
        self._dim = h_matrix.shape[0]
        self._dense = self._dim <= dense_limit
        if self._dense:
            evals, evecs = np.linalg.eigh(self._h.toarray())
            self._evals = evals
            self._evecs = evecs

    def apply(self, amplitudes: np.ndarray, t: float) -> np.ndarray:
        if self._dense:
            coeffs = self._evecs.conj().T @ amplitudes
            return self._evecs @ (np.exp(-1j * self._evals * t) * coeffs)
        if t == 0.0:
            return amplitudes.copy()
        return expm_multiply(-1j * t * self._h, amplitudes)

    def evolve(self, state: OracleState, t: float) -> OracleState:
        out = self.apply(state.amplitudes, t)
        nrm = float(np.linalg.norm(out))
        if abs(nrm - 1.0) > 1e-9:
            raise CohChaosError(f"evolution norm drift {abs(nrm - 1.0):.3e} at t = {t}")
        return OracleState(amplitudes=out, config=state.config, truncation_deficit=state.truncation_deficit)


def evolve(state: OracleState, h_matrix: sp.spmatrix, t: float) -> OracleState:
    """One-shot exact evolution; build an ExactEvolver for repeated times."""
    return ExactEvolver(h_matrix).evolve(state, t)


def _field_truncation_deficit(x: complex, n_max: int) -> float:
    # Poisson tail mass beyond n_max for mean |x|^2
    return float(gammainc(n_max + 1.0, abs(x) ** 2))


def product_coherent_vector(x: complex, y: complex, cfg: HilbertConfig) -> OracleState:
    """Normalized product coherent state D(x)|0> (x) D(y)|j,-j> on the basis.

    The field truncation loss must stay below 1e-8; it is recorded on the
    returned state after renormalization.
    """
    deficit = _field_truncation_deficit(x, cfg.n_max)
    if deficit > 1e-8:
        raise TruncationError(
            f"field truncation deficit {deficit:.3e} at n_max = {cfg.n_max} for |x| = {abs(x):.3f}; "
            f"policy recommends n_max >= {recommended_n_max(x)}"
        )
    field = displaced_basis_vector(HEISENBERG, x, 0, truncation=cfg.n_max + 1, deficit_tol=1e-8).vector
    spin_part = displaced_basis_vector(spin(cfg.j), y, 0).vector
    amps = np.kron(field, spin_part)
    amps = amps / np.linalg.norm(amps)
    return OracleState(amplitudes=amps, config=cfg, truncation_deficit=deficit)


def doorway_vector(s: ProductState, cfg: HilbertConfig) -> OracleState:
    """Product of first-excited displaced states D(x)|1> (x) D(y)|j,-j+1>."""
    field = displaced_basis_vector(HEISENBERG, s.x, 1, truncation=cfg.n_max + 1, deficit_tol=1e-8)
    spin_part = displaced_basis_vector(spin(cfg.j), s.y, 1)
    amps = np.kron(field.vector, spin_part.vector)
    amps = amps / np.linalg.norm(amps)
    return OracleState(amplitudes=amps, config=cfg, truncation_deficit=field.norm_deficit)


def reduced_linear_entropy(state: OracleState, which: str = "field") -> float:
    """Linear entropy 1 - Tr(rho^2) of one side's reduced density matrix.

    Both reductions are computed and must agree to 1e-10 (a pure joint
    state has symmetric Schmidt spectrum); the requested side is returned.
    """
    if which not in ("field", "spin"):
        raise ValueError("which must be 'field' or 'spin'")
    m = state.amplitudes.reshape(state.config.n_max + 1, state.config.spin_dim)
    rho_f = m @ m.conj().T
    rho_s = m.T @ m.conj()
    purity_f = float(np.sum(np.abs(rho_f) ** 2))
    purity_s = float(np.sum(np.abs(rho_s) ** 2))
    if abs(purity_f - purity_s) > 1e-10:
        raise CohChaosError(f"reduced purities disagree: {purity_f!r} vs {purity_s!r}")
    purity = purity_f if which == "field" else purity_s
    return float(1.0 - purity)


def exact_overlap_pair(s1: OracleState, s2: OracleState) -> complex:
    """Inner product <s1|s2>; both states must share a basis configuration."""
    if s1.config != s2.config:
        raise ValueError("overlap requires matching Hilbert configurations")
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))


def field_annihilation_expectation(state: OracleState) -> complex:
    """Expectation <a> of the field lowering operator."""
    m = state.amplitudes.reshape(state.config.n_max + 1, state.config.spin_dim)
    ns = np.arange(1, state.config.n_max + 1)
    # <a> = sum_n sqrt(n) conj(psi[n-1,k]) psi[n,k]
    return complex(np.sum(np.sqrt(ns)[:, None] * np.conj(m[:-1, :]) * m[1:, :]))


def operator_expectation(state: OracleState, op: sp.spmatrix) -> complex:
    return complex(np.vdot(state.amplitudes, op @ state.amplitudes))


def save_amplitudes_csv(state: OracleState, path) -> None:
    """Regression-fixture export: one row per basis state (n, k, re, im)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "k", "re", "im"])
        spin_dim = state.config.spin_dim
        for idx, amp in enumerate(state.amplitudes):
            w.writerow([idx // spin_dim, idx % spin_dim, f"{amp.real:.17g}", f"{amp.imag:.17g}"])


def load_amplitudes_csv(path, cfg: HilbertConfig) -> OracleState:
    """Inverse of save_amplitudes_csv."""
    amps = np.zeros(cfg.dim, dtype=complex)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            idx = int(row["n"]) * cfg.spin_dim + int(row["k"])
            amps[idx] = complex(float(row["re"]), float(row["im"]))
    return OracleState(amplitudes=amps, config=cfg)
