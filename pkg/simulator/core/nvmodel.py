"""
NV centre physics layer.

The electron ground states |+1>_e, |-1>_e form a Lambda system with the
excited state |A2>. Only the bright superposition |b> = (|+1> + |-1>)/sqrt(2)
couples to the linearly polarized driving photon; the dark superposition is
pumped to |0>_e through the A1 transition, which ends the operation cycle.
|0>_e is therefore not a third level here but a run-termination flag.

Absorption followed by emission maps |b>_e onto the electron-photon Bell pair
(|+1>_e|s-> + |-1>_e|s+>)/sqrt(2).
"""
import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from django.core.exceptions import ValidationError

from simulator.core.statevec import (
    ELECTRON,
    NUCLEAR,
    StateVector,
    detach,
    measure,
    outcome_probabilities,
    photon,
    product_state,
    project,
)
from simulator.exceptions import ProtocolError

logger = logging.getLogger(__name__)

_SQRT2_INV = 1 / np.sqrt(2)


class NVBasis:
    """Named single-subsystem vectors in the bit convention of statevec."""
    ELECTRON_PLUS = np.array([1, 0], dtype=complex)
    ELECTRON_MINUS = np.array([0, 1], dtype=complex)
    BRIGHT = np.array([1, 1], dtype=complex) * _SQRT2_INV
    DARK = np.array([1, -1], dtype=complex) * _SQRT2_INV
    NUCLEAR_PLUS = np.array([1, 0], dtype=complex)
    NUCLEAR_MINUS = np.array([0, 1], dtype=complex)
    SIGMA_MINUS = np.array([1, 0], dtype=complex)
    SIGMA_PLUS = np.array([0, 1], dtype=complex)

    # Filter outcome 0 = bright, 1 = dark (shelved via A1)
    BRIGHT_DARK = (BRIGHT, DARK)

    # Electron-photon pair emitted from |A2>, indexed [electron bit, photon bit]
    EMITTED_PAIR = np.array([[1, 0], [0, 1]], dtype=complex) * _SQRT2_INV


class CycleStatus(enum.Enum):
    BRIGHT = 'bright'
    SHELVED = 'shelved'


@dataclass(frozen=True)
class CycleResult:
    status: CycleStatus
    branch_probability: float
    state: Optional[StateVector] = None

    def __post_init__(self):
        if self.status is CycleStatus.SHELVED and self.state is not None:
            raise ProtocolError('A shelved cycle terminates the run and carries no state')
        if self.status is CycleStatus.BRIGHT and self.state is None:
            raise ProtocolError('A bright cycle must carry the collapsed state')

    @property
    def is_bright(self):
        return self.status is CycleStatus.BRIGHT


def prepare_initial(nuclear_init=0):
    """|b>_e (x) |nuclear_init>_n with layout [Electron, Nuclear]."""
    if nuclear_init not in (0, 1):
        raise ValidationError(f'nuclear_init must be 0 or 1. Got: {nuclear_init!r}')
    nuclear = NVBasis.NUCLEAR_PLUS if nuclear_init == 0 else NVBasis.NUCLEAR_MINUS
    return product_state((ELECTRON, NUCLEAR), [NVBasis.BRIGHT, nuclear])


def bright_probability(state):
    return float(outcome_probabilities(state, ELECTRON, NVBasis.BRIGHT_DARK)[0])


def bright_dark_filter(state, rng):
    """
    Projective {|b>, |d>} measurement of the electron.

    The dark outcome is shelved into |0>_e and returned without a state.
    """
    p_bright = bright_probability(state)
    outcome, collapsed = measure(state, ELECTRON, NVBasis.BRIGHT_DARK, rng)
    if outcome == 1:
        logger.debug(f'Filter shelved the electron (p_bright={p_bright:.6f})')
        return CycleResult(CycleStatus.SHELVED, branch_probability=1.0 - p_bright)
    return CycleResult(CycleStatus.BRIGHT, branch_probability=p_bright, state=collapsed)


def _next_photon_index(state):
    return state.photon_count() + 1


def absorb_emit(state, new_photon_index):
    """
    Absorb the driving photon on |b>_e and emit a new photon entangled with the electron.

    Args:
        state: state whose electron factor is exactly |b>_e
        new_photon_index: emission order of the new photon (next free index)

    Returns:
        StateVector with Photon(new_photon_index) appended and the electron, at its
        original layout position, in the Bell pair with that photon.
    """
    expected = _next_photon_index(state)
    if new_photon_index != expected:
        raise ValidationError(f'Next photon index must be {expected}. Got: {new_photon_index}')
    position = state.position(ELECTRON)
    try:
        rest = detach(state, [ELECTRON], NVBasis.BRIGHT)
    except ProtocolError:
        logger.error('absorb_emit called while the electron is not in the bright state')
        raise

    amplitudes = np.einsum('ep,r->erp', NVBasis.EMITTED_PAIR, rest.amplitudes)
    amplitudes = np.moveaxis(amplitudes.reshape([2] * (rest.size + 2)), 0, position)
    layout = rest.layout[:position] + (ELECTRON,) + rest.layout[position:] + (photon(new_photon_index),)
    return StateVector(layout, amplitudes.reshape(-1))


def reexcite_without_cnot(state):
    """
    Negative control: drive the electron again without the nuclear gates.

    The bright branch is selected by projection (the filter's successful outcome),
    then a new photon is emitted. The previous photon ends up in a product state.
    """
    _, bright = project(state, np.outer(NVBasis.BRIGHT, NVBasis.BRIGHT.conj()), [ELECTRON])
    return absorb_emit(bright, _next_photon_index(bright))
