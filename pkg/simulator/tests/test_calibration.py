from unittest import mock

from django.test import SimpleTestCase

from simulator.core import calibrated
from simulator.core.calibration import (
    CHECK_LENGTHS,
    CalibrationResult,
    calibrate_sequence,
    candidate_corrections,
    candidate_sequences,
    render_calibrated_module,
    target_reached,
)
from simulator.core.gates import GateKind
from simulator.core.protocol import ProtocolKind, calibrated_sequence, ideal_branch_states
from simulator.exceptions import CalibrationError


def passes_everywhere(kind, sequence, correction, lengths):
    for m in lengths:
        states = ideal_branch_states(sequence, m)
        if set(states) != {0, 1}:
            return False
        if not all(target_reached(kind, correction.apply(states[b], m, b), m) for b in (0, 1)):
            return False
    return True


class FrozenScheduleTests(SimpleTestCase):
    def test_frozen_schedules_reach_their_targets(self):
        for kind in ProtocolKind:
            sequence, correction = calibrated_sequence(kind)
            self.assertTrue(passes_everywhere(kind, sequence, correction, range(2, 7)), kind.value)

    def test_ghz_schedule_has_one_controlled_gate_per_cycle(self):
        sequence, _ = calibrated_sequence(ProtocolKind.GHZ)
        self.assertEqual(sequence.period, 1)
        self.assertEqual(sum(gate.is_controlled for gate in sequence.gates_for_cycle(1)), 1)


class SearchTests(SimpleTestCase):
    def test_candidate_order_starts_with_single_gates(self):
        first = next(candidate_sequences())
        self.assertEqual(first.tokens(), (('H',),))
        self.assertEqual(len(list(candidate_corrections(2))), 3 * 9 * 4)

    def test_ghz_search(self):
        result = calibrate_sequence(ProtocolKind.GHZ)
        self.assertTrue(passes_everywhere(ProtocolKind.GHZ, result.sequence, result.correction, CHECK_LENGTHS + (5,)))
        again = calibrate_sequence(ProtocolKind.GHZ)
        self.assertEqual(again.sequence, result.sequence)
        self.assertEqual(again.correction, result.correction)
        self.assertEqual(again.schedules_tried, result.schedules_tried)

    def test_cluster_search(self):
        result = calibrate_sequence(ProtocolKind.CLUSTER)
        self.assertTrue(
            passes_everywhere(ProtocolKind.CLUSTER, result.sequence, result.correction, CHECK_LENGTHS + (5,))
        )

    def test_exhausted_search_reports_best_candidate(self):
        with mock.patch('simulator.core.calibration.SEARCH_GATES', (GateKind.HADAMARD_E,)), \
                mock.patch('simulator.core.calibration.MAX_GATES_PER_CYCLE', 2):
            with self.assertRaises(CalibrationError) as cm:
                calibrate_sequence(ProtocolKind.GHZ)
        self.assertIsNotNone(cm.exception.best_candidate)
        self.assertEqual(cm.exception.best_score, 0)


class GeneratedModuleTests(SimpleTestCase):
    def test_rendered_module_reproduces_the_constants(self):
        results = {}
        for kind in ProtocolKind:
            sequence, correction = calibrated_sequence(kind)
            results[kind.value] = CalibrationResult(kind, sequence, correction, schedules_tried=0)
        namespace = {}
        exec(render_calibrated_module(results), namespace)
        self.assertEqual(namespace['CALIBRATED'], calibrated.CALIBRATED)
        self.assertEqual(list(namespace['CALIBRATED']), ['ghz', 'cluster'])
