"""
Exhaustive search for the per-cycle gate schedule and branch corrections.

Candidates are tried in a fixed order, so the result is deterministic:
    schedules: period 1 first, then period-2 pairs of distinct slots; every slot
               is a list of 1..3 gates from (H, CX, CY), shortest first;
    corrections: phase on photon 1, phase on photon m per slot, then the branch
               Pauli (Z or X) on the first or last photon.
A candidate passes when both nuclear branches give the target at every checked
length: GHZ fidelity >= 1 - 1e-9, or all cluster stabilizers at +1 within 1e-10.
"""
import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from pprint import pformat

from simulator.core.gates import GateKind
from simulator.core.protocol import (
    PHASE_NAMES,
    BranchCorrection,
    GateSequence,
    GateStep,
    ProtocolKind,
    cluster_stabilizers,
    ideal_branch_states,
    ideal_cluster,
    ideal_ghz,
    stabilizer_expectations,
)
from simulator.core.statevec import overlap
from simulator.exceptions import CalibrationError, ProtocolError

logger = logging.getLogger(__name__)

SEARCH_GATES = (GateKind.HADAMARD_E, GateKind.CONTROLLED_X_EN, GateKind.CONTROLLED_Y_EN)
MAX_GATES_PER_CYCLE = 3
CHECK_LENGTHS = (2, 3, 4)
GHZ_FIDELITY_TOL = 1e-9
STABILIZER_TOL = 1e-10
PAULI_OPTIONS = (('Z', 'first'), ('Z', 'last'), ('X', 'first'), ('X', 'last'))

CALIBRATED_MODULE = Path(__file__).with_name('calibrated.py')


@dataclass
class CalibrationResult:
    kind: ProtocolKind
    sequence: GateSequence
    correction: BranchCorrection
    schedules_tried: int

    def as_record(self):
        return {'schedule': self.sequence.tokens(), 'correction': self.correction.to_dict()}


def candidate_slots():
    for length in range(1, MAX_GATES_PER_CYCLE + 1):
        for gates in itertools.product(SEARCH_GATES, repeat=length):
            yield tuple(GateStep(gate) for gate in gates)


def candidate_sequences():
    slots = list(candidate_slots())
    for slot in slots:
        yield GateSequence((slot,))
    for first, second in itertools.product(slots, repeat=2):
        if first != second:
            yield GateSequence((first, second))


def candidate_corrections(period):
    for first in PHASE_NAMES:
        for last in itertools.product(PHASE_NAMES, repeat=period):
            for pauli, pauli_on in PAULI_OPTIONS:
                yield BranchCorrection(first_phase=first, last_phases=last, pauli=pauli, pauli_on=pauli_on)


def target_reached(kind, state, m):
    if kind is ProtocolKind.GHZ:
        return abs(overlap(ideal_ghz(m), state)) ** 2 >= 1 - GHZ_FIDELITY_TOL
    # overlap with the standard cluster screens cheaply; stabilizers decide
    if abs(overlap(ideal_cluster(m, 0), state)) ** 2 < 1 - GHZ_FIDELITY_TOL:
        return False
    values = stabilizer_expectations(state, cluster_stabilizers(m))
    return all(abs(v - 1) <= STABILIZER_TOL for v in values)


def _branch_states(sequence, m):
    try:
        states = ideal_branch_states(sequence, m)
    except ProtocolError:
        return None
    return states if len(states) == 2 else None


def calibrate_sequence(kind):
    """
    Return the first (GateSequence, BranchCorrection) that reaches the target on both branches.

    Raises CalibrationError carrying the best candidate when the search is exhausted.
    """
    kind = ProtocolKind(kind)
    best, best_score = None, -1
    for tried, sequence in enumerate(candidate_sequences(), start=1):
        survivors = list(candidate_corrections(sequence.period))
        passed_lengths = 0
        for m in CHECK_LENGTHS:
            states = _branch_states(sequence, m)
            if states is None:
                survivors = []
                break
            survivors = [
                c for c in survivors
                if all(target_reached(kind, c.apply(states[b], m, b), m) for b in (0, 1))
            ]
            if not survivors:
                break
            passed_lengths += 1
        if passed_lengths > best_score:
            best, best_score = str(sequence), passed_lengths
        if survivors:
            logger.info(f'Calibrated {kind.value}: {sequence} with {survivors[0]} after {tried} schedules')
            return CalibrationResult(kind, sequence, survivors[0], tried)
    logger.error(f'Calibration of {kind.value} exhausted the search space')
    raise CalibrationError(f'No gate schedule reproduces the {kind.value} target', best, best_score)


def render_calibrated_module(results):
    """Source text of the generated constants module for {kind value: CalibrationResult}."""
    record = {kind: results[kind].as_record() for kind in sorted(results, key=lambda k: k != 'ghz')}
    return (
        '# Generated by `python manage.py calibrate --write`. Do not edit by hand.\n'
        '#\n'
        '# Per-cycle gate schedules (one tuple per period slot) and branch corrections\n'
        '# found by the exhaustive sequence search.\n'
        '\n'
        f'CALIBRATED = {pformat(record, sort_dicts=False, width=100)}\n'
    )


def write_calibrated_module(results, path=CALIBRATED_MODULE):
    Path(path).write_text(render_calibrated_module(results), encoding='utf-8')
    logger.info(f'Wrote calibrated constants to {path}')
    return path
