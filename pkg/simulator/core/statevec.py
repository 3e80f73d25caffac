"""
Dense state-vector and density-matrix engine over labeled two-level subsystems.

Bit convention (bit-exact, every golden file depends on it):
    * amplitude index <-> basis string is big-endian in layout order, i.e. the
      first subsystem of the layout is the most significant bit;
    * electron |+1>_e = bit 0, |-1>_e = bit 1;
    * nuclear  |+1>_n = bit 0, |-1>_n = bit 1;
    * photon   |sigma-> = bit 0, |sigma+> = bit 1.

Values are immutable from the caller's perspective: every operation returns a
new StateVector. Randomness only enters through an explicitly passed
numpy Generator.
"""
import enum
import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from simulator.exceptions import ForbiddenBranch, ProtocolError
from simulator.validators import (
    validate_ensemble_weights,
    validate_orthonormal_basis,
    validate_projector,
    validate_unitary,
)

logger = logging.getLogger(__name__)

NORM_TOL = 1e-12
MATRIX_TOL = 1e-10
PSD_FLOOR = -1e-9
FORBIDDEN_PROBABILITY = 1e-14
# PSD check diagonalizes the full matrix; above this dimension only Hermiticity/trace are checked
PSD_CHECK_MAX_DIM = 1024

_SQRT2_INV = 1 / np.sqrt(2)

# Single-qubit matrices
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = np.array([[1, 0], [0, -1j]], dtype=complex)

PAULI = {'I': I2, 'X': X, 'Y': Y, 'Z': Z}


def controlled(u):
    """4x4 gate applying `u` to the second target when the first target is |1>."""
    gate = np.eye(4, dtype=complex)
    gate[2:, 2:] = u
    return gate


CNOT = controlled(X)


class Kind(enum.Enum):
    ELECTRON = 'e'
    NUCLEAR = 'n'
    PHOTON = 'p'


@dataclass(frozen=True)
class SubsystemLabel:
    """Role of one two-level subsystem; photons carry their emission order."""
    kind: Kind
    index: int = 0

    def __post_init__(self):
        if self.index < 0:
            raise ValidationError(f'Subsystem index must be non-negative. Got: {self.index}')
        if self.kind is Kind.PHOTON and self.index < 1:
            raise ValidationError('Photon indices start at 1')
        if self.kind is not Kind.PHOTON and self.index != 0:
            raise ValidationError(f'Spin labels use index 0. Got: {self.index}')

    def __str__(self):
        return f'p{self.index}' if self.kind is Kind.PHOTON else self.kind.value


ELECTRON = SubsystemLabel(Kind.ELECTRON)
NUCLEAR = SubsystemLabel(Kind.NUCLEAR)


def photon(index):
    return SubsystemLabel(Kind.PHOTON, index)


def photons(m):
    return tuple(photon(k) for k in range(1, m + 1))


def validate_layout(layout):
    """At most one electron and one nuclear label; photon indices unique and contiguous from 1."""
    if len(set(layout)) != len(layout):
        raise ValidationError(f'Duplicate subsystem in layout: {[str(l) for l in layout]}')
    photon_indices = sorted(l.index for l in layout if l.kind is Kind.PHOTON)
    if photon_indices != list(range(1, len(photon_indices) + 1)):
        raise ValidationError(f'Photon indices must be contiguous from 1. Got: {photon_indices}')


_BASIS_TEXT = {
    Kind.ELECTRON: ('+1', '-1'),
    Kind.NUCLEAR: ('+1', '-1'),
    Kind.PHOTON: ('s-', 's+'),
}


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        layout = tuple(self.layout)
        validate_layout(layout)
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != 2 ** len(layout):
            raise ValidationError(
                f'Expected {2 ** len(layout)} amplitudes for {len(layout)} subsystems, got {amplitudes.shape[0]}'
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, 'layout', layout)
        object.__setattr__(self, 'amplitudes', amplitudes)

    @property
    def size(self):
        return len(self.layout)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def position(self, label):
        try:
            return self.layout.index(label)
        except ValueError:
            raise ValidationError(f'Subsystem {label} is not in layout {[str(l) for l in self.layout]}') from None

    def tensor(self):
        return self.amplitudes.reshape([2] * self.size) if self.size else self.amplitudes.copy()

    def photon_count(self):
        return sum(1 for l in self.layout if l.kind is Kind.PHOTON)

    def basis_text(self, index):
        bits = format(index, f'0{self.size}b') if self.size else ''
        return ' '.join(f'{label}:{_BASIS_TEXT[label.kind][int(b)]}' for label, b in zip(self.layout, bits))

    def __repr__(self):
        return f'StateVector(layout=[{", ".join(str(l) for l in self.layout)}], norm={self.norm:.12f})'


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: tuple
    elements: np.ndarray

    def __post_init__(self):
        elements = np.array(self.elements, dtype=complex)
        dim = 2 ** len(self.layout)
        if elements.shape != (dim, dim):
            raise ValidationError(f'Expected a {dim}x{dim} density matrix, got {elements.shape}')
        elements.setflags(write=False)
        object.__setattr__(self, 'layout', tuple(self.layout))
        object.__setattr__(self, 'elements', elements)

    @property
    def dim(self):
        return self.elements.shape[0]

    def trace(self):
        return float(np.real(np.trace(self.elements)))

    def validate(self, check_psd=None):
        """
        Check Hermiticity (1e-10), unit trace (1e-10) and positivity (eigenvalues >= -1e-9).

        Positivity needs a full diagonalization and is skipped above PSD_CHECK_MAX_DIM
        unless explicitly requested.
        """
        rho = self.elements
        if np.max(np.abs(rho - rho.conj().T)) > MATRIX_TOL:
            raise ValidationError('Density matrix is not Hermitian')
        if abs(self.trace() - 1.0) > MATRIX_TOL:
            raise ValidationError(f'Density matrix trace is {self.trace():.12f}, expected 1')
        if check_psd is None:
            check_psd = self.dim <= PSD_CHECK_MAX_DIM
        if check_psd:
            smallest = float(np.linalg.eigvalsh(rho)[0])
            if smallest < PSD_FLOOR:
                raise ValidationError(f'Density matrix is not positive semidefinite (eigenvalue {smallest:.3e})')
        return self


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def make_basis_state(layout, basis_index):
    dim = 2 ** len(layout)
    if not 0 <= basis_index < dim:
        raise ValidationError(f'Basis index must lie in [0, {dim}). Got: {basis_index}')
    amplitudes = np.zeros(dim, dtype=complex)
    amplitudes[basis_index] = 1.0
    return StateVector(tuple(layout), amplitudes)


def product_state(layout, vectors):
    amplitudes = np.ones(1, dtype=complex)
    for vector in vectors:
        amplitudes = np.kron(amplitudes, np.asarray(vector, dtype=complex))
    return StateVector(tuple(layout), amplitudes)


def _check_normalized(vector, what):
    norm = np.linalg.norm(vector)
    if abs(norm - 1.0) > NORM_TOL * 1e2:
        raise ValidationError(f'{what} must be normalized. Got norm {norm:.15f}')


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _target_positions(state, targets):
    if len(set(targets)) != len(targets):
        raise ValidationError(f'Repeated gate target: {[str(t) for t in targets]}')
    return [state.position(t) for t in targets]


def _apply_matrix(state, matrix, targets):
    positions = _target_positions(state, targets)
    k = len(positions)
    if matrix.shape != (2 ** k, 2 ** k):
        raise ValidationError(f'Operator of shape {matrix.shape} does not act on {k} subsystem(s)')
    psi = np.moveaxis(state.tensor(), positions, list(range(k)))
    moved_shape = psi.shape
    psi = (matrix @ psi.reshape(2 ** k, -1)).reshape(moved_shape)
    return np.moveaxis(psi, list(range(k)), positions).reshape(-1)


def apply_gate(state, gate, targets):
    """
    Apply a 2x2 (one target) or 4x4 (two targets, first target = most significant) unitary.
    """
    gate = np.asarray(gate, dtype=complex)
    validate_unitary(gate)
    return StateVector(state.layout, _apply_matrix(state, gate, list(targets)))


def append_subsystem(state, label, sub_state):
    if label in state.layout:
        raise ValidationError(f'Subsystem {label} already present')
    sub_state = np.asarray(sub_state, dtype=complex).reshape(-1)
    if sub_state.shape != (2,):
        raise ValidationError('Appended subsystem state must be a 2-vector')
    _check_normalized(sub_state, 'Appended subsystem state')
    return StateVector(state.layout + (label,), np.kron(state.amplitudes, sub_state))


def project(state, projector, targets):
    """
    Apply the projector P on `targets` and renormalize.

    Returns (probability, collapsed). Raises ForbiddenBranch when the probability is
    below 1e-14; the caller decides whether that is an error.
    """
    projector = np.asarray(projector, dtype=complex)
    validate_projector(projector)
    projected = _apply_matrix(state, projector, list(targets))
    probability = float(np.real(np.vdot(projected, projected)))
    if probability < FORBIDDEN_PROBABILITY:
        raise ForbiddenBranch(probability)
    return probability, StateVector(state.layout, projected / np.sqrt(probability))


def outcome_probabilities(state, target, basis):
    validate_orthonormal_basis(basis)
    probabilities = []
    for vector in basis:
        vector = np.asarray(vector, dtype=complex)
        projected = _apply_matrix(state, np.outer(vector, vector.conj()), [target])
        probabilities.append(float(np.real(np.vdot(projected, projected))))
    return np.array(probabilities)


def measure(state, target, basis, rng):
    """
    Projective measurement of one subsystem in an orthonormal basis (u0, u1).

    The outcome is drawn from a single rng.random() call, so the result is a
    deterministic function of the generator state.
    """
    probabilities = outcome_probabilities(state, target, basis)
    outcome = 1 if rng.random() < probabilities[1] / probabilities.sum() else 0
    vector = np.asarray(basis[outcome], dtype=complex)
    _, collapsed = project(state, np.outer(vector, vector.conj()), [target])
    return outcome, collapsed


def detach(state, labels, sub_state, tol=MATRIX_TOL):
    """
    Split off subsystems known to be in the product factor `sub_state`.

    `sub_state` is a vector over `labels` (in the given order). Fails loudly with
    ProtocolError if the state does not factor as sub_state (x) rest.
    """
    positions = _target_positions(state, list(labels))
    k = len(positions)
    sub_state = np.asarray(sub_state, dtype=complex).reshape(-1)
    if sub_state.shape != (2 ** k,):
        raise ValidationError(f'Detached factor must have {2 ** k} amplitudes')
    psi = np.moveaxis(state.tensor(), positions, list(range(k))).reshape(2 ** k, -1)
    rest = sub_state.conj() @ psi
    weight = float(np.real(np.vdot(rest, rest)))
    if abs(weight - 1.0) > tol:
        raise ProtocolError(
            f'State does not factor on {[str(l) for l in labels]}: retained weight {weight:.12f}'
        )
    remaining = tuple(l for l in state.layout if l not in labels)
    return StateVector(remaining, rest / np.sqrt(weight))


def overlap(a, b):
    if a.layout != b.layout:
        raise ValidationError('Layouts differ')
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(state, operator, targets):
    acted = _apply_matrix(state, np.asarray(operator, dtype=complex), list(targets))
    return float(np.real(np.vdot(state.amplitudes, acted)))


def pure_density(state):
    return DensityMatrix(state.layout, np.outer(state.amplitudes, state.amplitudes.conj()))


def partial_trace(state, keep):
    """Reduced density matrix of `keep`, ordered as in the state's layout."""
    keep = [l for l in state.layout if l in set(keep)]
    positions = [state.position(l) for l in keep]
    k = len(positions)
    psi = np.moveaxis(state.tensor(), positions, list(range(k))).reshape(2 ** k, -1)
    return DensityMatrix(tuple(keep), psi @ psi.conj().T)


def fidelity_pure_mixed(ideal, rho):
    """F = <psi|rho|psi>, clipped into [0, 1] against round-off."""
    if ideal.layout != rho.layout:
        raise ValidationError(
            f'Layout mismatch: {[str(l) for l in ideal.layout]} vs {[str(l) for l in rho.layout]}'
        )
    psi = ideal.amplitudes
    value = float(np.real(np.vdot(psi, rho.elements @ psi)))
    return min(1.0, max(0.0, value))


def density_from_ensemble(states):
    """rho = sum_i w_i |psi_i><psi_i|; weights non-negative and summing to 1."""
    if not states:
        raise ValidationError('Ensemble is empty')
    weights = np.array([w for w, _ in states], dtype=float)
    validate_ensemble_weights(weights)
    layout = states[0][1].layout
    if any(s.layout != layout for _, s in states):
        raise ValidationError('Ensemble members have different layouts')
    psi = np.stack([s.amplitudes for _, s in states])
    rho = (psi.T * weights) @ psi.conj()
    return DensityMatrix(layout, rho).validate(check_psd=False)


def _bipartite_matrix(state, partition):
    partition = list(dict.fromkeys(partition))
    if not partition:
        raise ValidationError('Partition is empty')
    if len(partition) >= state.size:
        raise ValidationError('Partition must leave a non-empty complement')
    positions = [state.position(l) for l in partition]
    k = len(positions)
    return np.moveaxis(state.tensor(), positions, list(range(k))).reshape(2 ** k, -1)


def schmidt_coefficients(state, partition):
    return np.linalg.svd(_bipartite_matrix(state, partition), compute_uv=False)


def schmidt_rank(state, partition, tol=1e-9):
    return int(np.sum(schmidt_coefficients(state, partition) > tol))


def amplitude_dump(state):
    """Debug dump for golden files: `index<TAB>basis<TAB>re<TAB>im`, 17 significant digits."""
    from simulator.utils.csv_output import format_real

    lines = []
    for index, amplitude in enumerate(state.amplitudes):
        lines.append(
            f'{index}\t{state.basis_text(index)}\t{format_real(amplitude.real)}\t{format_real(amplitude.imag)}'
        )
    return '\n'.join(lines) + '\n'
