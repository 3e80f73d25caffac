import itertools
import tempfile
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from scipy.stats import chi2_contingency

from simulator.core.gates import GateKind, Placement
from simulator.core.noise import NoiseModel
from simulator.core.protocol import (
    BranchCorrection,
    FidelityCurve,
    GateSequence,
    GateStep,
    ProtocolKind,
    calibrated_sequence,
    cluster_stabilizers,
    cycle_pass_rates,
    fidelity_curve,
    ghz_stabilizers,
    ideal_branch_states,
    ideal_cluster,
    ideal_ghz,
    run_protocol,
    stabilizer_expectations,
    target_state,
)
from simulator.core.stats import RateConfig, simulate_sessions
from simulator.core.statevec import (
    Z,
    apply_gate,
    overlap,
    partial_trace,
    photon,
    photons,
    product_state,
    schmidt_rank,
)

TEN_DEGREES = np.deg2rad(10)


def corrected_branches(kind, m):
    """Both corrected nuclear branches of an ideal run."""
    sequence, correction = calibrated_sequence(kind)
    states = ideal_branch_states(sequence, m)
    return {branch: correction.apply(state, m, branch) for branch, state in states.items()}


class TargetStateTests(SimpleTestCase):
    def test_ghz_amplitudes(self):
        np.testing.assert_allclose(ideal_ghz(2).amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))
        expected = np.zeros(8)
        expected[0] = expected[7] = 1 / np.sqrt(2)
        np.testing.assert_allclose(ideal_ghz(3).amplitudes, expected)

    def test_ghz_marginals_are_maximally_mixed(self):
        state = ideal_ghz(4)
        for label in state.layout:
            np.testing.assert_allclose(partial_trace(state, [label]).elements, np.eye(2) / 2, atol=1e-12)

    def test_ghz_needs_two_photons(self):
        with self.assertRaises(ValidationError):
            ideal_ghz(1)

    def test_cluster_two_photons(self):
        np.testing.assert_allclose(ideal_cluster(2, 0).amplitudes, np.array([1, 1, 1, -1]) / 2)

    def test_cluster_branches_are_orthogonal(self):
        for m in (2, 3, 5):
            self.assertLess(abs(overlap(ideal_cluster(m, 0), ideal_cluster(m, 1))), 1e-12)

    def test_cluster_branch_one_carries_z_on_later_photons(self):
        state = ideal_cluster(3, 0)
        for index in (2, 3):
            state = apply_gate(state, Z, [photon(index)])
        np.testing.assert_allclose(state.amplitudes, ideal_cluster(3, 1).amplitudes, atol=1e-12)

    def test_cluster_is_stabilized(self):
        for m in (2, 3, 6):
            values = stabilizer_expectations(ideal_cluster(m, 0), cluster_stabilizers(m))
            np.testing.assert_allclose(values, np.ones(m), atol=1e-12)

    def test_cluster_input_validation(self):
        with self.assertRaises(ValidationError):
            ideal_cluster(1)
        with self.assertRaises(ValidationError):
            ideal_cluster(3, branch=2)

    def test_single_photon_target_is_plus(self):
        for kind in ProtocolKind:
            np.testing.assert_allclose(target_state(kind, 1).amplitudes, np.array([1, 1]) / np.sqrt(2))


class StabilizerTests(SimpleTestCase):
    def test_ghz_generators(self):
        self.assertEqual(ghz_stabilizers(3), ['XXX', 'ZZI', 'IZZ'])
        np.testing.assert_allclose(stabilizer_expectations(ideal_ghz(3), ['XXX', 'ZZI', 'IZZ']), [1, 1, 1], atol=1e-12)

    def test_cluster_generators(self):
        self.assertEqual(cluster_stabilizers(3), ['XZI', 'ZXZ', 'IZX'])
        values = stabilizer_expectations(ideal_cluster(3, 0), ['XZI', 'ZXZ', 'IZX'])
        np.testing.assert_allclose(values, [1, 1, 1], atol=1e-12)

    def test_expectations_are_bounded(self):
        rng = np.random.default_rng(6)
        vectors = []
        for _ in range(3):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            vectors.append(v / np.linalg.norm(v))
        (value,) = stabilizer_expectations(product_state(photons(3), vectors), ['XXX'])
        self.assertTrue(-1 <= value <= 1)

    def test_size_mismatch(self):
        with self.assertRaises(ValidationError):
            stabilizer_expectations(ideal_ghz(3), ['XX'])
        with self.assertRaises(ValidationError):
            stabilizer_expectations(ideal_ghz(2), ['XQ'])


class ScheduleTests(SimpleTestCase):
    def test_parse_tokens(self):
        step = GateStep.parse('H:before')
        self.assertEqual(step.gate, GateKind.HADAMARD_E)
        self.assertEqual(step.placement, Placement.BEFORE_B)
        self.assertEqual(GateStep.parse('CY').placement, Placement.AFTER_B)

    def test_after_b_gates_run_first(self):
        sequence = GateSequence.from_tokens((('H:before', 'CX'),))
        self.assertEqual(sequence.gates_for_cycle(1), [GateKind.CONTROLLED_X_EN, GateKind.HADAMARD_E])

    def test_period_two_alternates(self):
        sequence, _ = calibrated_sequence(ProtocolKind.CLUSTER)
        self.assertEqual(sequence.period, 2)
        self.assertEqual(sequence.gates_for_cycle(1), sequence.gates_for_cycle(3))
        self.assertNotEqual(sequence.gates_for_cycle(1), sequence.gates_for_cycle(2))

    def test_schedule_limits(self):
        with self.assertRaises(ValidationError):
            GateSequence.from_tokens((('H',), ('CX',), ('CY',)))
        with self.assertRaises(ValidationError):
            GateSequence.from_tokens((('H', 'CX', 'H', 'CX'),))

    def test_correction_ops(self):
        correction = BranchCorrection(first_phase='SDG', last_phases=('S', 'SDG'), pauli='Z', pauli_on='last')
        self.assertEqual(correction.ops(3, 1), [('SDG', 1), ('S', 3), ('Z', 3)])
        self.assertEqual(correction.ops(2, 0), [('SDG', 1), ('SDG', 2)])
        with self.assertRaises(ValidationError):
            BranchCorrection(pauli='H')


class IdealRunTests(SimpleTestCase):
    def test_ghz_two_photons(self):
        outcome = run_protocol(ProtocolKind.GHZ, 2, rng=np.random.default_rng(1))
        self.assertFalse(outcome.shelved_early)
        self.assertEqual(outcome.achieved_m, 2)
        self.assertAlmostEqual(abs(overlap(ideal_ghz(2), outcome.photon_state)), 1.0, delta=1e-9)
        self.assertGreaterEqual(outcome.incident_photons, 3)

    def test_single_photon_run(self):
        outcome = run_protocol(ProtocolKind.GHZ, 1, rng=np.random.default_rng(0))
        self.assertAlmostEqual(outcome.fidelity_vs_ideal, 1.0, delta=1e-9)

    def test_cluster_two_photons(self):
        outcome = run_protocol(ProtocolKind.CLUSTER, 2, rng=np.random.default_rng(3))
        values = stabilizer_expectations(outcome.photon_state, cluster_stabilizers(2))
        np.testing.assert_allclose(values, [1, 1], atol=1e-10)

    def test_ghz_both_branches_up_to_eight_photons(self):
        for m in range(2, 9):
            for branch, state in corrected_branches(ProtocolKind.GHZ, m).items():
                self.assertGreaterEqual(abs(overlap(ideal_ghz(m), state)) ** 2, 1 - 1e-9, f'm={m} branch={branch}')

    def test_cluster_both_branches_up_to_eight_photons(self):
        for m in range(2, 9):
            branches = corrected_branches(ProtocolKind.CLUSTER, m)
            self.assertEqual(set(branches), {0, 1})
            for branch, state in branches.items():
                values = stabilizer_expectations(state, cluster_stabilizers(m))
                np.testing.assert_allclose(values, np.ones(m), atol=1e-10, err_msg=f'm={m} branch={branch}')

    def test_ghz_outputs_are_ghz_class(self):
        m = 4
        for state in corrected_branches(ProtocolKind.GHZ, m).values():
            labels = photons(m)
            for size in range(1, m):
                for part in itertools.combinations(labels, size):
                    self.assertEqual(schmidt_rank(state, part), 2)
            for label in labels:
                np.testing.assert_allclose(partial_trace(state, [label]).elements, np.eye(2) / 2, atol=1e-12)

    def test_runs_agree_across_seeds(self):
        for kind in ProtocolKind:
            for seed in range(6):
                outcome = run_protocol(kind, 4, rng=np.random.default_rng(seed))
                self.assertAlmostEqual(outcome.fidelity_vs_ideal, 1.0, delta=1e-9)

    def test_conditioned_run_weight(self):
        outcome = run_protocol(ProtocolKind.GHZ, 3, rng=np.random.default_rng(0), conditioned=True)
        self.assertEqual(outcome.attempts, 1)
        self.assertAlmostEqual(outcome.branch_weight, 2 ** -3, delta=1e-12)

    def test_shelved_outcomes(self):
        shelved = []
        for seed in range(20):
            outcome = run_protocol(ProtocolKind.GHZ, 4, rng=np.random.default_rng(seed), post_select_bright=False)
            if outcome.shelved_early:
                shelved.append(outcome)
        self.assertTrue(shelved)
        for outcome in shelved:
            self.assertIsNone(outcome.photon_state)
            self.assertIsNone(outcome.fidelity_vs_ideal)
            self.assertLess(outcome.achieved_m, 4)

    def test_input_validation(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(ValidationError):
            run_protocol(ProtocolKind.GHZ, 0, rng=rng)
        with self.assertRaises(ValidationError):
            run_protocol(ProtocolKind.GHZ, 13, rng=rng)
        with self.assertRaises(ValidationError):
            run_protocol(ProtocolKind.GHZ, 2)


class BrightPassStatisticsTests(SimpleTestCase):
    runs = 10_000
    lengths = range(2, 7)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.outcomes = {}
        for m in cls.lengths:
            rng = np.random.default_rng([2718, m])
            cls.outcomes[m] = [
                run_protocol(ProtocolKind.GHZ, m, rng=rng, post_select_bright=False) for _ in range(cls.runs)
            ]

    def test_pass_rate_is_one_half(self):
        for k, (passes, reached) in cycle_pass_rates(self.outcomes[3], 4).items():
            three_sigma = 3 * np.sqrt(0.25 / reached)
            self.assertLessEqual(abs(passes / reached - 0.5), three_sigma, f'cycle {k}')

    def test_chain_lengths_match_the_classical_model(self):
        for m, outcomes in self.outcomes.items():
            with self.subTest(m=m):
                config = RateConfig(tau=1e-6, cycle_time=m * 1e-6, repetitions=self.runs)
                histogram = simulate_sessions(config, np.random.default_rng([3141, m]))
                lengths = range(1, m + 1)
                quantum = [sum(o.achieved_m == length for o in outcomes) for length in lengths]
                classical = [histogram.counts.get(length, 0) for length in lengths]
                _, p_value, _, _ = chi2_contingency([quantum, classical])
                self.assertGreater(p_value, 0.01)


class FidelityCurveTests(SimpleTestCase):
    def test_ideal_curve(self):
        curve = fidelity_curve(ProtocolKind.CLUSTER, 5, NoiseModel.ideal(), trials=3, seed=0)
        self.assertEqual([m for m, _ in curve.points], [2, 3, 4, 5])
        for fidelity in curve.fidelities():
            self.assertAlmostEqual(fidelity, 1.0, delta=1e-9)

    def test_curve_is_deterministic(self):
        noise = NoiseModel(gate_angle_max=TEN_DEGREES, bath_phase_max=TEN_DEGREES)
        first = fidelity_curve(ProtocolKind.GHZ, 4, noise, trials=20, seed=9)
        second = fidelity_curve(ProtocolKind.GHZ, 4, noise, trials=20, seed=9)
        self.assertEqual(first.points, second.points)

    def test_retry_mode_agrees_with_ideal(self):
        curve = fidelity_curve(ProtocolKind.GHZ, 3, None, trials=5, seed=1, conditioned=False)
        for fidelity in curve.fidelities():
            self.assertAlmostEqual(fidelity, 1.0, delta=1e-9)

    def test_csv_output(self):
        curve = FidelityCurve(kind=ProtocolKind.GHZ, trials=10, seed=4, points=[(2, 0.5), (3, 0.25)])
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'curve.csv'
            curve.write_csv(path)
            self.assertEqual(path.read_text(), 'm,F,trials,seed\n2,0.5,10,4\n3,0.25,10,4\n')

    def test_trials_must_be_positive(self):
        with self.assertRaises(ValidationError):
            fidelity_curve(ProtocolKind.GHZ, 3, None, trials=0, seed=0)


class NoisyFidelityTests(SimpleTestCase):
    trials = 1000

    def test_fidelity_decreases_with_chain_length(self):
        noise = NoiseModel(gate_angle_max=TEN_DEGREES, bath_phase_max=TEN_DEGREES)
        fidelities = fidelity_curve(ProtocolKind.GHZ, 10, noise, self.trials, seed=2).fidelities()
        self.assertLess(fidelities[0], 1.0)
        for shorter, longer in zip(fidelities, fidelities[1:]):
            self.assertLessEqual(longer, shorter)

    def test_bath_errors_hurt_less_than_gate_errors(self):
        for kind in ProtocolKind:
            gate_only = fidelity_curve(kind, 10, NoiseModel(gate_angle_max=TEN_DEGREES), self.trials, seed=3)
            bath_only = fidelity_curve(kind, 10, NoiseModel(bath_phase_max=TEN_DEGREES), self.trials, seed=3)
            self.assertEqual(len(bath_only.points), 9)
            for (m, gate_f), (_, bath_f) in zip(gate_only.points, bath_only.points):
                with self.subTest(kind=kind.value, m=m):
                    self.assertGreaterEqual(bath_f, gate_f)
