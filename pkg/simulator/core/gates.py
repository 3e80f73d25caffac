"""
Gates acting on the NV spins, ideal and with a perturbed rotation angle.

Every gate is written as a rotation whose angle can be perturbed:
    HadamardE       R_y(pi/2 + eps) . Z          (exact H at eps = 0)
    ControlledX_en  controlled-(i R_x(pi + eps)) (exact CNOT at eps = 0)
    ControlledY_en  controlled-(i R_y(pi + eps))
    LocalPauliE     i R_p(pi + eps) on the electron
"""
import enum

import numpy as np

from simulator.core.statevec import ELECTRON, NUCLEAR, PAULI, Z, controlled


class GateKind(enum.Enum):
    HADAMARD_E = 'H'
    CONTROLLED_X_EN = 'CX'
    CONTROLLED_Y_EN = 'CY'
    LOCAL_X_E = 'XE'
    LOCAL_Y_E = 'YE'
    LOCAL_Z_E = 'ZE'

    @property
    def is_controlled(self):
        return self in (GateKind.CONTROLLED_X_EN, GateKind.CONTROLLED_Y_EN)

    @property
    def targets(self):
        return (ELECTRON, NUCLEAR) if self.is_controlled else (ELECTRON,)


class Placement(enum.Enum):
    """Where a gate sits relative to the absorption-emission (B) event of its cycle."""
    BEFORE_B = 'before'
    AFTER_B = 'after'


_ROTATION_AXIS = {
    GateKind.CONTROLLED_X_EN: 'X',
    GateKind.CONTROLLED_Y_EN: 'Y',
    GateKind.LOCAL_X_E: 'X',
    GateKind.LOCAL_Y_E: 'Y',
    GateKind.LOCAL_Z_E: 'Z',
}


def rotation(axis, angle):
    """R_axis(angle) = exp(-i angle P / 2) for a Pauli axis 'X', 'Y' or 'Z'."""
    return np.cos(angle / 2) * PAULI['I'] - 1j * np.sin(angle / 2) * PAULI[axis]


def gate_matrix(kind, epsilon=0.0):
    """Unitary of `kind` with its generating rotation angle offset by `epsilon` radians."""
    if kind is GateKind.HADAMARD_E:
        return rotation('Y', np.pi / 2 + epsilon) @ Z
    pauli_like = 1j * rotation(_ROTATION_AXIS[kind], np.pi + epsilon)
    if kind.is_controlled:
        return controlled(pauli_like)
    return pauli_like


IDEAL = {kind: gate_matrix(kind) for kind in GateKind}
