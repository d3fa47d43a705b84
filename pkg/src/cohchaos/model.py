"""Bilinear oscillator-spin Hamiltonians and their mean-field reduction.

The class of models treated here couples two degrees of freedom through
terms linear in each algebra,

    H = sum_i alpha_i A_i + sum_j beta_j B_j + sum_ij gamma_ij A_i B_j,

with i, j running over (ZERO, PLUS, MINUS).  Self-consistent mean-field
coefficients replace the partner operators by coherent expectation values,
which is exactly the factorized limit of the Heisenberg equations of motion
for product coherent states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Gen, GroupKind, HEISENBERG, CohChaosError, expectation, spin

# dagger permutation of the generator ordering (ZERO, PLUS, MINUS)
_DAG = (0, 2, 1)


class HermiticityError(CohChaosError):
    """Coefficient arrays violate the hermiticity constraints."""


def _as_c3(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class BilinearHamiltonian:
    """Immutable coefficient bundle for one oscillator-spin (or general) model.

    alpha and beta are the linear coefficients of the two sides, gamma[i, j]
    couples A_i to B_j.  Construction rejects any violation of hermiticity:
    alpha_0, beta_0 real, alpha_- = conj(alpha_+) (same for beta), and
    gamma[dag(i), dag(j)] = conj(gamma[i, j]) where dag swaps PLUS and MINUS.
    """

    group_a: GroupKind
    group_b: GroupKind
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        alpha = _as_c3(self.alpha, "alpha")
        beta = _as_c3(self.beta, "beta")
        gamma = np.asarray(self.gamma, dtype=complex)
        if gamma.shape != (3, 3):
            raise ValueError(f"gamma must have shape (3, 3), got {gamma.shape}")
        if not np.all(np.isfinite(gamma.view(float))):
            raise ValueError("gamma must be finite")
        scale = max(1.0, float(np.abs(alpha).max()), float(np.abs(beta).max()), float(np.abs(gamma).max()))
        tol = 1e-12 * scale
        problems = []
        for name, vec in (("alpha", alpha), ("beta", beta)):
            if abs(vec[Gen.ZERO].imag) > tol:
                problems.append(f"{name}[ZERO] must be real")
            if abs(vec[Gen.MINUS] - np.conj(vec[Gen.PLUS])) > tol:
                problems.append(f"{name}[MINUS] must equal conj({name}[PLUS])")
        for i in range(3):
            for jj in range(3):
                if abs(gamma[_DAG[i], _DAG[jj]] - np.conj(gamma[i, jj])) > tol:
                    problems.append(f"gamma[{_DAG[i]},{_DAG[jj]}] must equal conj(gamma[{i},{jj}])")
        if problems:
            raise HermiticityError("; ".join(sorted(set(problems))))
        for arr, name in ((alpha, "alpha"), (beta, "beta"), (gamma, "gamma")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class MaserParams:
    """Parameters of the driven spin-oscillator model.

    epsilon is the spin splitting, omega the oscillator frequency, g the
    co-rotating and g_prime the counter-rotating coupling, j the spin
    magnitude.  Couplings enter the Hamiltonian divided by sqrt(j).
    """

    epsilon: float = 1.0
    omega: float = 1.0
    g: float = 0.5
    g_prime: float = 0.2
    j: float = 4.5

    def __post_init__(self) -> None:
        for name in ("epsilon", "omega", "g", "g_prime", "j"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
        spin(self.j)  # validates half-integer positivity


def maser_hamiltonian(p: MaserParams) -> BilinearHamiltonian:
    """Oscillator-spin model omega a^dag a + epsilon J_z plus sqrt(j)-normalized couplings.

    The co-rotating part g (a^dag J_- + a J_+)/sqrt(j) conserves excitation
    number; the counter-rotating part g' (a^dag J_+ + a J_-)/sqrt(j) breaks
    it and is what opens the door to classical chaos.
    """
    root_j = np.sqrt(p.j)
    gamma = np.zeros((3, 3), dtype=complex)
    gamma[Gen.PLUS, Gen.MINUS] = p.g / root_j
    gamma[Gen.MINUS, Gen.PLUS] = p.g / root_j
    gamma[Gen.PLUS, Gen.PLUS] = p.g_prime / root_j
    gamma[Gen.MINUS, Gen.MINUS] = p.g_prime / root_j
    return BilinearHamiltonian(
        group_a=HEISENBERG,
        group_b=spin(p.j),
        alpha=np.array([p.omega, 0.0, 0.0], dtype=complex),
        beta=np.array([p.epsilon, 0.0, 0.0], dtype=complex),
        gamma=gamma,
    )


@dataclass(frozen=True)
class MeanFieldCoeffs:
    """Self-consistent one-body coefficients (a, b) ordered (ZERO, PLUS, MINUS)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _as_c3(self.a, "a"))
        object.__setattr__(self, "b", _as_c3(self.b, "b"))
        self.a.setflags(write=False)
        self.b.setflags(write=False)


def _expectations(group: GroupKind, z: complex) -> np.ndarray:
    return np.array([expectation(group, i, z) for i in (Gen.ZERO, Gen.PLUS, Gen.MINUS)])


def mean_field_coeffs(h: BilinearHamiltonian, x: complex, y: complex) -> MeanFieldCoeffs:
    """Coefficients a_i = alpha_i + sum_j gamma_ij <B_j>_y and the mirrored b_j.

    The zero components stay real and the raising/lowering components stay
    conjugate because the partner expectations are themselves conjugate
    pairs on a hermitian model.
    """
    ev_a = _expectations(h.group_a, x)
    ev_b = _expectations(h.group_b, y)
    a = h.alpha + h.gamma @ ev_b
    b = h.beta + h.gamma.T @ ev_a
    # hermiticity of h guarantees these analytically; guard against drift
    for vec in (a, b):
        if abs(vec[Gen.ZERO].imag) > 1e-10 * max(1.0, abs(vec[Gen.ZERO])):
            raise HermiticityError("mean-field zero component acquired an imaginary part")
        vec[Gen.ZERO] = vec[Gen.ZERO].real
    return MeanFieldCoeffs(a=a, b=b)


def classical_energy(h: BilinearHamiltonian, x: complex, y: complex) -> float:
    """Energy of the product coherent state with labels (x, y).

    E = sum_i alpha_i <A_i> + sum_j beta_j <B_j> + sum_ij gamma_ij <A_i><B_j>.
    The imaginary residue is asserted tiny (hermiticity) and discarded.
    """
    ev_a = _expectations(h.group_a, x)
    ev_b = _expectations(h.group_b, y)
    e = h.alpha @ ev_a + h.beta @ ev_b + ev_a @ h.gamma @ ev_b
    scale = max(1.0, abs(e))
    if abs(e.imag) > 1e-12 * scale:
        raise HermiticityError(f"energy has imaginary residue {e.imag:.3e}; hermiticity bug")
    return float(e.real)


def interaction_energy(h: BilinearHamiltonian, x: complex, y: complex) -> float:
    """Coherent expectation of the coupling term alone, sum_ij gamma_ij <A_i><B_j>.

    This is the c-number the decoupled single-factor Hamiltonians count
    twice; the exact-state phase carries it back as a counterterm.
    """
    e = _expectations(h.group_a, x) @ h.gamma @ _expectations(h.group_b, y)
    scale = max(1.0, abs(e))
    if abs(e.imag) > 1e-12 * scale:
        raise HermiticityError(f"interaction energy has imaginary residue {e.imag:.3e}")
    return float(e.real)
