"""
Error channels for the protocol runs.

* imperfect gates: the rotation angle of each gate is offset by eps ~ U[-max, max],
  drawn independently per gate application;
* quasi-static dephasing: one detuning sample per run (RunDisorder), turned into
  Z phases on the nuclear and electron spins for every inter-photon interval;
* a single nuclear phase kick eta, the channel behind the two-photon error state.

The bath follows the pure-dephasing reduction of the secular hyperfine
Hamiltonian: the electron sees the Overhauser field sum_j A_zz,j m_j of the
13C spins, the 14N nuclear spin sees the same field scaled by gamma_n/gamma_e,
and the electron-nuclear coupling A adds a fixed Z(x)Z phase. A Hahn echo on
the electron removes both electron terms.
"""
import enum
import logging
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from scipy import constants

from simulator.core.gates import GateKind, gate_matrix, rotation
from simulator.core.statevec import ELECTRON, NUCLEAR, StateVector, apply_gate, photons
from simulator.validators import validate_angle_bound, validate_positive

logger = logging.getLogger(__name__)

# Gyromagnetic ratios, rad s^-1 T^-1
GAMMA_ELECTRON = 1.76085963e11
GAMMA_C13 = 6.728284e7
GAMMA_N14 = 1.9337792e7

NM = 1e-9


class BathMode(enum.Enum):
    UNIFORM = 'uniform'
    GAUSSIAN = 'gaussian'
    EXPLICIT = 'explicit'


def dipolar_zz(position, gamma_e=GAMMA_ELECTRON, gamma_c=GAMMA_C13):
    """
    zz element of the electron-13C dipolar tensor in rad/s.

    (mu0/4pi) gamma_e gamma_c hbar / r^3 * (1 - 3 z^2/r^2); hbar turns the
    coupling energy into an angular frequency.
    """
    position = np.asarray(position, dtype=float)
    r = np.linalg.norm(position, axis=-1)
    prefactor = constants.mu_0 / (4 * np.pi) * gamma_e * gamma_c * constants.hbar / r ** 3
    return prefactor * (1 - 3 * position[..., 2] ** 2 / r ** 2)


@dataclass(frozen=True, eq=False)
class BathConfig:
    """13C spins around the NV centre. Positions in metres, one row per spin."""
    positions: np.ndarray
    hyperfine_a: float = field(default_factory=lambda: settings.SIMULATOR_HYPERFINE_A)
    gamma_e: float = GAMMA_ELECTRON
    gamma_c: float = GAMMA_C13
    gamma_n: float = GAMMA_N14

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float).reshape(-1, 3)
        if np.any(np.linalg.norm(positions, axis=1) == 0):
            raise ValidationError('Bath spin positions must be nonzero')
        positions.setflags(write=False)
        object.__setattr__(self, 'positions', positions)
        if not np.all(np.isfinite(self.couplings())):
            raise ValidationError('Bath couplings must be finite')
        if not np.isfinite(self.hyperfine_a):
            raise ValidationError(f'Hyperfine coupling must be finite. Got: {self.hyperfine_a}')

    def couplings(self):
        return dipolar_zz(self.positions, self.gamma_e, self.gamma_c)

    @property
    def size(self):
        return self.positions.shape[0]

    def to_dict(self):
        return {
            'positions_m': self.positions.tolist(),
            'hyperfine_a': self.hyperfine_a,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(positions=np.array(data['positions_m'], dtype=float), hyperfine_a=data['hyperfine_a'])


def load_bath_table(path):
    """Read `x y z` rows in nanometres ('#' comments) and return positions in metres."""
    try:
        table = np.loadtxt(path, comments='#', ndmin=2)
    except ValueError as e:
        raise ValidationError(f'Bath file {path} is not an `x y z` table: {e}')
    if table.size == 0:
        raise ValidationError(f'Bath file {path} lists no spins')
    if table.shape[1] != 3:
        raise ValidationError(f'Bath file {path} must have three columns. Got: {table.shape[1]}')
    return table * NM


def random_bath(n_spins, rng, r_min_nm=None, r_max_nm=None, hyperfine_a=None):
    """
    Placeholder bath: spins placed uniformly in a spherical shell.

    Geometry defaults to SIMULATOR_BATH_RADIUS_NM_MIN/MAX; these are not measured values.
    """
    r_min_nm = settings.SIMULATOR_BATH_RADIUS_NM_MIN if r_min_nm is None else r_min_nm
    r_max_nm = settings.SIMULATOR_BATH_RADIUS_NM_MAX if r_max_nm is None else r_max_nm
    validate_positive(n_spins, 'n_spins')
    if not 0 < r_min_nm < r_max_nm:
        raise ValidationError(f'Shell radii must satisfy 0 < r_min < r_max. Got: {r_min_nm}, {r_max_nm}')
    directions = rng.normal(size=(n_spins, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    u = rng.random(n_spins)
    radii = np.cbrt(r_min_nm ** 3 + u * (r_max_nm ** 3 - r_min_nm ** 3))
    positions = directions * radii[:, None] * NM
    kwargs = {} if hyperfine_a is None else {'hyperfine_a': hyperfine_a}
    return BathConfig(positions=positions, **kwargs)


@dataclass(frozen=True)
class NoiseModel:
    """
    Angles in radians, tau in seconds.

    electron_phase_max is the electron's per-interval phase scale: the bound in
    UNIFORM mode and the standard deviation in GAUSSIAN mode. bath_sigma is the
    nuclear standard deviation in GAUSSIAN mode.
    """
    gate_angle_max: float = 0.0
    bath_phase_max: float = 0.0
    bath_mode: BathMode = BathMode.UNIFORM
    bath_sigma: float = 0.0
    electron_phase_max: float = 0.0
    bath: Optional[BathConfig] = None
    hahn_echo: bool = False
    tau: float = 1e-6
    seed: Optional[int] = None

    def __post_init__(self):
        validate_angle_bound(self.gate_angle_max, 'gate_angle_max')
        validate_angle_bound(self.bath_phase_max, 'bath_phase_max')
        validate_angle_bound(self.electron_phase_max, 'electron_phase_max')
        if self.bath_sigma < 0:
            raise ValidationError(f'bath_sigma must be non-negative. Got: {self.bath_sigma}')
        validate_positive(self.tau, 'tau')
        if self.bath_mode is BathMode.EXPLICIT and self.bath is None:
            raise ValidationError('Explicit bath mode needs a BathConfig')

    @classmethod
    def ideal(cls):
        return cls()

    @property
    def is_ideal(self):
        bath_silent = self.bath_mode is not BathMode.EXPLICIT and self.bath_phase_max == 0 and \
            self.bath_sigma == 0 and self.electron_phase_max == 0
        return self.gate_angle_max == 0 and bath_silent

    def to_dict(self):
        data = asdict(self)
        data['bath_mode'] = self.bath_mode.value
        data['bath'] = self.bath.to_dict() if self.bath is not None else None
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data['bath_mode'] = BathMode(data['bath_mode'])
        if data.get('bath') is not None:
            data['bath'] = BathConfig.from_dict(data['bath'])
        return cls(**data)


@dataclass(frozen=True)
class RunDisorder:
    """Static detunings (rad/s) shared by every interval of one run."""
    delta_n: float = 0.0
    delta_e: float = 0.0


def sample_run_disorder(model, rng):
    if model.bath_mode is BathMode.EXPLICIT:
        projections = rng.choice(np.array([-0.5, 0.5]), size=model.bath.size)
        delta_e = float(model.bath.couplings() @ projections)
        delta_n = model.bath.gamma_n / model.bath.gamma_e * delta_e
        return RunDisorder(delta_n=delta_n, delta_e=delta_e)
    if model.bath_mode is BathMode.GAUSSIAN:
        phase_n = rng.normal(0.0, model.bath_sigma)
        phase_e = rng.normal(0.0, model.electron_phase_max)
    else:
        phase_n = rng.uniform(-model.bath_phase_max, model.bath_phase_max)
        phase_e = rng.uniform(-model.electron_phase_max, model.electron_phase_max)
    return RunDisorder(delta_n=phase_n / model.tau, delta_e=phase_e / model.tau)


def _zz_phase(angle):
    """exp(-i angle Z(x)Z / 2) on (electron, nuclear)."""
    phases = np.exp(-0.5j * angle * np.array([1, -1, -1, 1]))
    return np.diag(phases)


def dephase_interval(state, disorder, model):
    """
    Phases accumulated over one inter-photon interval tau.

    Nuclear: R_z(delta_n tau). Electron, without echo: R_z(delta_e tau) and, with an
    explicit bath, the A I_z S_z cross phase exp(-i A tau Z_e Z_n / 4).
    """
    nuclear_angle = disorder.delta_n * model.tau
    if nuclear_angle != 0.0:
        state = apply_gate(state, rotation('Z', nuclear_angle), [NUCLEAR])
    if model.hahn_echo or ELECTRON not in state.layout:
        return state
    electron_angle = disorder.delta_e * model.tau
    if electron_angle != 0.0:
        state = apply_gate(state, rotation('Z', electron_angle), [ELECTRON])
    if model.bath_mode is BathMode.EXPLICIT and model.bath.hyperfine_a != 0.0:
        state = apply_gate(state, _zz_phase(model.bath.hyperfine_a * model.tau / 2), [ELECTRON, NUCLEAR])
    return state


def sample_gate_error(model, rng):
    return rng.uniform(-model.gate_angle_max, model.gate_angle_max)


def noisy_gate(gate, model, rng):
    """The gate unitary with a freshly drawn rotation-angle error."""
    if not isinstance(gate, GateKind):
        gate = GateKind(gate)
    return gate_matrix(gate, sample_gate_error(model, rng))


def inject_nuclear_phase(state, eta):
    """diag(e^{-i eta}, e^{+i eta}) on the nuclear spin, i.e. R_z(2 eta)."""
    return apply_gate(state, rotation('Z', 2 * eta), [NUCLEAR])


def phase_kick_branch_states(eta):
    """
    Corrected two-photon GHZ output after a nuclear kick eta between the two photons.

    Returns {branch: StateVector}: cos(eta)|G> -/+ i sin(eta)|G~> for nuclear branch 0/1,
    with |G> = (|00> + |11>)/sqrt(2) and |G~> = (|01> + |10>)/sqrt(2).
    """
    ghz = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    flipped = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
    return {
        0: StateVector(photons(2), np.cos(eta) * ghz - 1j * np.sin(eta) * flipped),
        1: StateVector(photons(2), np.cos(eta) * ghz + 1j * np.sin(eta) * flipped),
    }
