"""
Full protocol runs: GHZ and linear-cluster photon strings mediated by the nuclear spin.

One run of length m:
    prepare |b>_e |0>_n
    for k = 1..m:  filter -> absorb_emit(photon k) -> cycle gates -> interval dephasing
    filter -> absorb_emit(photon m+1)        (disentangles the electron)
    discard electron and photon m+1, measure the nuclear spin in Z, correct the branch
"""
import enum
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from django.core.exceptions import ValidationError

from simulator.core import calibrated
from simulator.core.gates import IDEAL, GateKind, Placement
from simulator.core.noise import (
    NoiseModel,
    dephase_interval,
    inject_nuclear_phase,
    noisy_gate,
    sample_run_disorder,
)
from simulator.core.nvmodel import NVBasis, absorb_emit, bright_dark_filter, prepare_initial
from simulator.core.statevec import (
    ELECTRON,
    NUCLEAR,
    PAULI,
    Kind,
    S,
    SDG,
    StateVector,
    apply_gate,
    density_from_ensemble,
    detach,
    fidelity_pure_mixed,
    measure,
    overlap,
    photon,
    photons,
    project,
)
from simulator.exceptions import ForbiddenBranch, ProtocolError
from simulator.validators import validate_photon_count

logger = logging.getLogger(__name__)

NUCLEAR_Z_BASIS = (NVBasis.NUCLEAR_PLUS, NVBasis.NUCLEAR_MINUS)
BRIGHT_PROJECTOR = np.outer(NVBasis.BRIGHT, NVBasis.BRIGHT.conj())

# Post-selected runs warn once the retry count passes this multiple of 2^m
RETRY_WARNING_FACTOR = 16
MAX_ATTEMPTS = 1_000_000
# Ensembles above this dimension are scored from overlaps instead of a dense rho
DENSE_RHO_MAX_DIM = 2 ** 10


class ProtocolKind(enum.Enum):
    GHZ = 'ghz'
    CLUSTER = 'cluster'


# ---------------------------------------------------------------------------
# Gate schedules and branch corrections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateStep:
    gate: GateKind
    placement: Placement = Placement.AFTER_B

    @classmethod
    def parse(cls, token):
        """'H', 'CX' or 'CY:before' style tokens."""
        name, _, placement = token.partition(':')
        return cls(GateKind(name), Placement(placement) if placement else Placement.AFTER_B)

    def token(self):
        if self.placement is Placement.AFTER_B:
            return self.gate.value
        return f'{self.gate.value}:{self.placement.value}'


@dataclass(frozen=True)
class GateSequence:
    """
    Periodic per-cycle schedule; slot (k-1) % period is used in cycle k.

    Within the window between two absorption events, the cycle's after-B gates
    run first and its before-B gates last, right before the next event.
    """
    schedule: tuple

    def __post_init__(self):
        if not 1 <= len(self.schedule) <= 2:
            raise ValidationError(f'Gate schedules have period 1 or 2. Got: {len(self.schedule)}')
        for slot in self.schedule:
            if len(slot) > 3:
                raise ValidationError(f'At most 3 gates per cycle. Got: {len(slot)}')
            if not all(isinstance(step, GateStep) for step in slot):
                raise ValidationError('Schedule entries must be GateStep values')

    @classmethod
    def from_tokens(cls, schedule):
        return cls(tuple(tuple(GateStep.parse(token) for token in slot) for slot in schedule))

    @property
    def period(self):
        return len(self.schedule)

    def gates_for_cycle(self, k):
        slot = self.schedule[(k - 1) % self.period]
        after = [step.gate for step in slot if step.placement is Placement.AFTER_B]
        before = [step.gate for step in slot if step.placement is Placement.BEFORE_B]
        return after + before

    def tokens(self):
        return tuple(tuple(step.token() for step in slot) for slot in self.schedule)

    def __str__(self):
        return ' | '.join('[' + ' '.join(slot) + ']' for slot in self.tokens())


_CORRECTION_GATES = {'I': PAULI['I'], 'S': S, 'SDG': SDG, 'X': PAULI['X'], 'Y': PAULI['Y'], 'Z': PAULI['Z']}
PHASE_NAMES = ('I', 'SDG', 'S')


@dataclass(frozen=True)
class BranchCorrection:
    """
    Single-photon corrections fixed per (kind, m, branch).

    A phase gate on photon 1, a phase gate on photon m chosen by the schedule slot of
    cycle m, then on branch 1 a Pauli on the first or last photon.
    """
    first_phase: str = 'I'
    last_phases: tuple = ('I',)
    pauli: str = 'Z'
    pauli_on: str = 'first'

    def __post_init__(self):
        object.__setattr__(self, 'last_phases', tuple(self.last_phases))
        if self.first_phase not in PHASE_NAMES or not all(p in PHASE_NAMES for p in self.last_phases):
            raise ValidationError(f'Phase corrections must be one of {PHASE_NAMES}')
        if self.pauli not in ('X', 'Y', 'Z'):
            raise ValidationError(f'Branch correction must be a Pauli. Got: {self.pauli}')
        if self.pauli_on not in ('first', 'last'):
            raise ValidationError(f"pauli_on must be 'first' or 'last'. Got: {self.pauli_on}")

    def ops(self, m, branch):
        """List of (gate name, photon index) applied in order."""
        ops = []
        if self.first_phase != 'I':
            ops.append((self.first_phase, 1))
        last = self.last_phases[(m - 1) % len(self.last_phases)]
        if last != 'I':
            ops.append((last, m))
        if branch == 1:
            ops.append((self.pauli, 1 if self.pauli_on == 'first' else m))
        return ops

    def apply(self, state, m, branch):
        for name, index in self.ops(m, branch):
            state = apply_gate(state, _CORRECTION_GATES[name], [photon(index)])
        return state

    def to_dict(self):
        return {
            'first_phase': self.first_phase,
            'last_phases': self.last_phases,
            'pauli': self.pauli,
            'pauli_on': self.pauli_on,
        }


def calibrated_sequence(kind):
    """Frozen (GateSequence, BranchCorrection) for `kind`."""
    kind = ProtocolKind(kind)
    record = calibrated.CALIBRATED[kind.value]
    return GateSequence.from_tokens(record['schedule']), BranchCorrection(**record['correction'])


# ---------------------------------------------------------------------------
# Ideal targets and stabilizers
# ---------------------------------------------------------------------------

def _plus_state():
    return StateVector(photons(1), np.array([1, 1], dtype=complex) / np.sqrt(2))


def ideal_ghz(m):
    if m < 2:
        raise ValidationError(f'GHZ states need at least 2 photons. Got: {m}')
    amplitudes = np.zeros(2 ** m, dtype=complex)
    amplitudes[0] = amplitudes[-1] = 1 / np.sqrt(2)
    return StateVector(photons(m), amplitudes)


def _cluster_signs(m):
    bits = (np.arange(2 ** m)[:, None] >> np.arange(m - 1, -1, -1)) & 1
    edges = np.sum(bits[:, :-1] * bits[:, 1:], axis=1)
    return bits, (-1.0) ** edges


def ideal_cluster(m, branch=0):
    """
    Linear cluster from the product (|0>_a Z_{a+1} + |1>_a) over a = 1..m.

    Branch 0 is the standard graph state sum_x (-1)^{sum x_a x_{a+1}} |x> / 2^{m/2};
    branch 1 carries an extra Z on photons 2..m and is orthogonal to branch 0.
    """
    if m < 2:
        raise ValidationError(f'Cluster states need at least 2 photons. Got: {m}')
    if branch not in (0, 1):
        raise ValidationError(f'Branch must be 0 or 1. Got: {branch!r}')
    bits, signs = _cluster_signs(m)
    if branch == 1:
        signs = signs * (-1.0) ** np.sum(bits[:, 1:], axis=1)
    return StateVector(photons(m), signs.astype(complex) / 2 ** (m / 2))


def target_state(kind, m):
    """Canonical corrected output; a lone photon ends in |+> for both kinds."""
    kind = ProtocolKind(kind)
    if m == 1:
        return _plus_state()
    return ideal_ghz(m) if kind is ProtocolKind.GHZ else ideal_cluster(m, 0)


def ghz_stabilizers(m):
    if m == 1:
        return ['X']
    generators = ['X' * m]
    for a in range(m - 1):
        generators.append('I' * a + 'ZZ' + 'I' * (m - a - 2))
    return generators


def cluster_stabilizers(m):
    """K_a = Z_{a-1} X_a Z_{a+1} for a = 1..m."""
    generators = []
    for a in range(m):
        chars = ['I'] * m
        chars[a] = 'X'
        if a > 0:
            chars[a - 1] = 'Z'
        if a < m - 1:
            chars[a + 1] = 'Z'
        generators.append(''.join(chars))
    return generators


def stabilizers_for(kind, m):
    return ghz_stabilizers(m) if ProtocolKind(kind) is ProtocolKind.GHZ else cluster_stabilizers(m)


def stabilizer_expectations(state, generators):
    """<psi|P|psi> for each Pauli string, characters I/X/Y/Z over the photons in layout order."""
    labels = [label for label in state.layout if label.kind is Kind.PHOTON]
    values = []
    for generator in generators:
        if len(generator) != len(labels):
            raise ValidationError(
                f'Pauli string {generator!r} has length {len(generator)}, state has {len(labels)} photons'
            )
        acted = state
        for char, label in zip(generator.upper(), labels):
            if char not in PAULI:
                raise ValidationError(f'Unknown Pauli character {char!r} in {generator!r}')
            if char != 'I':
                acted = apply_gate(acted, PAULI[char], [label])
        values.append(float(np.real(np.vdot(state.amplitudes, acted.amplitudes))))
    return values


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

@dataclass
class ProtocolOutcome:
    requested_m: int
    achieved_m: int
    nuclear_branch: Optional[int]
    photon_state: Optional[StateVector]
    fidelity_vs_ideal: Optional[float]
    shelved_early: bool
    bright_passes: int
    attempts: int = 1
    incident_photons: int = 0
    branch_weight: float = 1.0

    def __post_init__(self):
        if self.achieved_m > self.requested_m:
            raise ProtocolError(f'achieved_m {self.achieved_m} exceeds requested_m {self.requested_m}')
        if (self.photon_state is None) != self.shelved_early:
            raise ProtocolError('photon_state must be present exactly when the run was not shelved')


@dataclass
class _Attempt:
    passes: int
    pulses: int
    weight: float
    state: Optional[StateVector] = None


def _filter_step(state, rng, conditioned):
    """Returns (bright state or None, branch probability)."""
    if conditioned:
        try:
            probability, collapsed = project(state, BRIGHT_PROJECTOR, [ELECTRON])
        except ForbiddenBranch as e:
            return None, e.probability
        return collapsed, probability
    result = bright_dark_filter(state, rng)
    return result.state, result.branch_probability


def _run_cycles(sequence, m, noise, rng, conditioned, phase_kicks, nuclear_init):
    """Cycles 1..m plus the disentangling excitation. Returns the attempt with state over [N, photons]."""
    disorder = sample_run_disorder(noise, rng) if noise is not None else None
    state = prepare_initial(nuclear_init)
    passes = pulses = 0
    weight = 1.0
    for k in range(1, m + 2):
        pulses += 1
        bright, probability = _filter_step(state, rng, conditioned)
        if bright is None:
            return _Attempt(passes, pulses, 0.0)
        passes += 1
        weight *= probability
        state = absorb_emit(bright, k)
        if k == m + 1:
            break
        for gate in sequence.gates_for_cycle(k):
            unitary = IDEAL[gate] if noise is None else noisy_gate(gate, noise, rng)
            state = apply_gate(state, unitary, gate.targets)
        if noise is not None:
            state = dephase_interval(state, disorder, noise)
        if phase_kicks and k in phase_kicks:
            state = inject_nuclear_phase(state, phase_kicks[k])
    try:
        state = detach(state, [ELECTRON, photon(m + 1)], NVBasis.EMITTED_PAIR.reshape(-1))
    except ProtocolError:
        logger.error(f'Electron failed to disentangle after photon {m + 1}')
        raise
    return _Attempt(passes, pulses, weight, state)


def measure_nuclear(state, rng):
    """Z measurement of the nuclear spin; returns (branch, photon-only state)."""
    branch, collapsed = measure(state, NUCLEAR, NUCLEAR_Z_BASIS, rng)
    return branch, detach(collapsed, [NUCLEAR], NUCLEAR_Z_BASIS[branch])


def project_nuclear(state, branch):
    """Force nuclear branch `branch`; raises ForbiddenBranch if it cannot occur."""
    vector = NUCLEAR_Z_BASIS[branch]
    probability, collapsed = project(state, np.outer(vector, vector.conj()), [NUCLEAR])
    return probability, detach(collapsed, [NUCLEAR], vector)


def _pure_fidelity(target, state):
    return float(min(1.0, abs(overlap(target, state)) ** 2))


def run_protocol(
    kind,
    m,
    noise=None,
    rng=None,
    post_select_bright=True,
    *,
    conditioned=False,
    sequence=None,
    correction=None,
    phase_kicks: Optional[Mapping[int, float]] = None,
    nuclear_init=0,
):
    """
    Execute one protocol run.

    Args:
        kind: ProtocolKind (or 'ghz' / 'cluster')
        m: requested chain length, 1 <= m <= SIMULATOR_MAX_PHOTONS
        noise: NoiseModel, or None for ideal gates and no dephasing
        rng: numpy Generator driving every random draw of the run
        post_select_bright: retry shelved runs from scratch (same rng stream, fresh
            disorder) until all m + 1 filters pass
        conditioned: replace the filter draws by projection onto the bright branch;
            the product of branch probabilities is kept as branch_weight
        sequence, correction: override the calibrated schedule and branch correction
        phase_kicks: {cycle k: eta} nuclear phase kicks applied after cycle k

    Returns:
        ProtocolOutcome
    """
    kind = ProtocolKind(kind)
    validate_photon_count(m)
    if rng is None:
        raise ValidationError('run_protocol needs a numpy Generator')
    default_sequence, default_correction = calibrated_sequence(kind)
    sequence = sequence or default_sequence
    correction = correction or default_correction
    if noise is not None and noise.is_ideal:
        noise = None

    attempts = pulses = 0
    warn_after = RETRY_WARNING_FACTOR * 2 ** m
    while True:
        attempts += 1
        attempt = _run_cycles(sequence, m, noise, rng, conditioned, phase_kicks, nuclear_init)
        pulses += attempt.pulses
        if attempt.state is not None or not post_select_bright or conditioned:
            break
        if attempts == warn_after:
            logger.warning(f'Post-selected {kind.value} run with m={m} still shelved after {attempts} attempts')
        if attempts >= MAX_ATTEMPTS:
            raise ProtocolError(f'No bright run of length {m} within {MAX_ATTEMPTS} attempts')

    if attempt.state is None:
        return ProtocolOutcome(
            requested_m=m,
            achieved_m=min(attempt.passes, m),
            nuclear_branch=None,
            photon_state=None,
            fidelity_vs_ideal=None,
            shelved_early=True,
            bright_passes=attempt.passes,
            attempts=attempts,
            incident_photons=pulses,
            branch_weight=attempt.weight,
        )

    branch, state = measure_nuclear(attempt.state, rng)
    state = correction.apply(state, m, branch)
    fidelity = _pure_fidelity(target_state(kind, m), state)
    logger.debug(f'{kind.value} m={m} branch={branch} attempts={attempts} F={fidelity:.12f}')
    return ProtocolOutcome(
        requested_m=m,
        achieved_m=m,
        nuclear_branch=branch,
        photon_state=state,
        fidelity_vs_ideal=fidelity,
        shelved_early=False,
        bright_passes=attempt.passes,
        attempts=attempts,
        incident_photons=pulses,
        branch_weight=attempt.weight,
    )


def ideal_branch_states(sequence, m):
    """
    Uncorrected photon states of both nuclear branches for an ideal, fully bright run.

    Returns {branch: StateVector}; a branch that cannot occur is missing.
    """
    attempt = _run_cycles(sequence, m, None, None, True, None, 0)
    if attempt.state is None:
        raise ForbiddenBranch(attempt.weight, f'Schedule {sequence} shelves deterministically at m={m}')
    states = {}
    for branch in (0, 1):
        try:
            _, states[branch] = project_nuclear(attempt.state, branch)
        except ForbiddenBranch:
            continue
    return states


def cycle_pass_rates(outcomes, max_cycle):
    """
    Empirical bright-pass rate of filter k (k = 2..max_cycle) over non-post-selected outcomes.

    Returns {k: (passes, reached)}: `reached` runs got to filter k, `passes` passed it.
    """
    bright = np.array([o.bright_passes for o in outcomes])
    rates = {}
    for k in range(2, max_cycle + 1):
        reached = int(np.sum(bright >= k - 1))
        passes = int(np.sum(bright >= k))
        rates[k] = (passes, reached)
    return rates


# ---------------------------------------------------------------------------
# Fidelity curve
# ---------------------------------------------------------------------------

def trial_rng(seed, m, trial):
    """Independent stream per (master seed, m, trial); results do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, m, trial]))


@dataclass
class FidelityCurve:
    kind: ProtocolKind
    trials: int
    seed: int
    points: list = field(default_factory=list)

    HEADER = ('m', 'F', 'trials', 'seed')

    def rows(self):
        return [(m, float(f), self.trials, self.seed) for m, f in self.points]

    def fidelities(self):
        return [f for _, f in self.points]

    def write_csv(self, path):
        from simulator.utils.csv_output import write_csv

        return write_csv(path, self.HEADER, self.rows())


def ensemble_fidelity(target, states, weights):
    """F = <psi|rho|psi> of the weighted ensemble; dense rho up to DENSE_RHO_MAX_DIM."""
    if 2 ** target.size <= DENSE_RHO_MAX_DIM:
        rho = density_from_ensemble(list(zip(weights, states)))
        return fidelity_pure_mixed(target, rho)
    overlaps = np.array([abs(overlap(target, s)) ** 2 for s in states])
    return float(min(1.0, np.dot(weights, overlaps)))


def fidelity_curve(kind, m_max, noise, trials, seed, *, m_min=2, conditioned=True, sequence=None, correction=None):
    """
    F_m for m = m_min..m_max over `trials` post-selected runs per m.

    Trial t at length m draws from SeedSequence([seed, m, t]). With `conditioned`
    each trial projects onto the bright branches and is weighted by its branch
    probability; otherwise shelved runs are retried and trials weigh equally.
    """
    kind = ProtocolKind(kind)
    if trials < 1:
        raise ValidationError(f'trials must be at least 1. Got: {trials}')
    validate_photon_count(m_max, minimum=m_min)
    noise = noise or NoiseModel.ideal()
    curve = FidelityCurve(kind=kind, trials=trials, seed=seed)
    logger.info(f'Fidelity curve {kind.value} m={m_min}..{m_max} trials={trials} seed={seed}')
    for m in range(m_min, m_max + 1):
        states, weights = [], []
        for trial in range(trials):
            outcome = run_protocol(
                kind, m, noise, trial_rng(seed, m, trial),
                post_select_bright=True, conditioned=conditioned,
                sequence=sequence, correction=correction,
            )
            if outcome.shelved_early:
                raise ProtocolError(f'Post-selected trial {trial} at m={m} came back shelved')
            states.append(outcome.photon_state)
            weights.append(outcome.branch_weight if conditioned else 1.0)
        weights = np.array(weights)
        weights = weights / weights.sum()
        fidelity = ensemble_fidelity(target_state(kind, m), states, weights)
        curve.points.append((m, fidelity))
        logger.info(f'F_{m} = {fidelity:.6f}')
    return curve
