import contextlib
import csv
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase, override_settings

from simulator.core.protocol import stabilizers_for
from simulator.exceptions import ProtocolError
from simulator.management.commands.run import Command as RunCommand
from simulator.models import SimulationRun


@override_settings(SIMULATOR_RECORD_RUNS=True)
class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.settings_override = override_settings(SIMULATOR_OUTPUT_DIR=self.dir)
        self.settings_override.enable()

    def tearDown(self):
        self.settings_override.disable()
        self.tmp.cleanup()

    def call(self, name, **options):
        stdout = StringIO()
        call_command(name, stdout=stdout, **options)
        return stdout.getvalue()

    def read_rows(self, path):
        with open(path, newline='') as handle:
            return list(csv.reader(handle))


class RunCommandTests(CommandTestCase):
    def test_post_selected_ghz_runs_are_perfect(self):
        out = self.dir / 'run.csv'
        stdout = self.call('run', kind='ghz', photons=3, trials=100, seed=7, post_select=True, out=str(out))
        rows = self.read_rows(out)
        self.assertEqual(rows[0], ['trial', 'achieved_m', 'branch', 'fidelity', 'attempts', 'bright_passes',
                                   'completed'])
        self.assertEqual(len(rows), 102)
        self.assertTrue(all(row[6] == '1' for row in rows[1:-1]))
        summary = rows[-1]
        self.assertEqual(summary[0], 'summary')
        self.assertEqual(summary[1], '3')
        self.assertEqual(summary[2], '')
        self.assertAlmostEqual(float(summary[3]), 1.0, delta=1e-9)
        self.assertEqual(summary[6], '100')
        self.assertIn('100/100 runs reached m=3', stdout)

    def test_single_cluster_run_without_retries_shelves(self):
        out = self.dir / 'c.csv'
        stdout = self.call('run', kind='cluster', photons=2, trials=1, seed=1, out=str(out))
        self.assertIn('0/1 runs reached m=2', stdout)
        self.assertIn('stabilizer report skipped', stdout)
        self.assertFalse(any(line.startswith('stabilizer ') for line in stdout.splitlines()))
        trial, summary = self.read_rows(out)[1:]
        self.assertEqual(trial[6], '0')
        self.assertEqual(summary[6], '0')
        self.assertEqual(summary[3], '')

    def test_cluster_stabilizer_report(self):
        stdout = self.call('run', kind='cluster', photons=2, trials=1, seed=1, post_select=True,
                           out=str(self.dir / 'c.csv'))
        self.report_is_plus_one(stdout, 'cluster', 2)
        stdout = self.call('run', kind='cluster', photons=4, trials=3, seed=1, post_select=True,
                           out=str(self.dir / 'c2.csv'))
        self.report_is_plus_one(stdout, 'cluster', 4)

    def test_ghz_stabilizer_report(self):
        stdout = self.call('run', kind='ghz', photons=3, trials=2, seed=5, post_select=True,
                           out=str(self.dir / 'g.csv'))
        self.report_is_plus_one(stdout, 'ghz', 3)

    def report_is_plus_one(self, stdout, kind, m):
        lines = [line for line in stdout.splitlines() if line.startswith('stabilizer ')]
        self.assertEqual(len(lines), len(stabilizers_for(kind, m)))
        for line in lines:
            parts = line.split()
            self.assertAlmostEqual(float(parts[3]), 1.0, delta=1e-10)
            self.assertAlmostEqual(float(parts[5]), 1.0, delta=1e-10)
        return lines

    def test_default_output_location(self):
        self.call('run', photons=2, post_select=True)
        self.assertTrue((self.dir / 'run.csv').exists())

    def test_missing_photons_exits_with_usage_error(self):
        with contextlib.redirect_stderr(StringIO()), self.assertRaises(SystemExit) as cm:
            RunCommand().run_from_argv(['manage.py', 'run', '--kind', 'ghz'])
        self.assertEqual(cm.exception.code, 2)

    def test_out_of_range_photons(self):
        with self.assertRaises(CommandError) as cm:
            self.call('run', photons=13, out=str(self.dir / 'x.csv'))
        self.assertEqual(cm.exception.returncode, 2)

    def test_invariant_violation_exits_with_one(self):
        with mock.patch('simulator.management.commands.run.run_protocol', side_effect=ProtocolError('boom')):
            with self.assertRaises(CommandError) as cm:
                self.call('run', photons=2, out=str(self.dir / 'x.csv'))
        self.assertEqual(cm.exception.returncode, 1)
        self.assertFalse(SimulationRun.objects.exists())

    def test_noise_file(self):
        noise = self.dir / 'noise.env'
        noise.write_text('gate_angle_max_deg=20\nbath_phase_max_deg=20\n')
        out = self.dir / 'noisy.csv'
        self.call('run', photons=3, trials=20, seed=1, post_select=True, noise=str(noise), out=str(out))
        self.assertLess(float(self.read_rows(out)[-1][3]), 1.0)
        run = SimulationRun.objects.get()
        self.assertIsNotNone(run.config['options']['noise_json'])
        self.assertIn('replay', self.call('replay', run_id=run.pk).lower())


class FidelitySweepCommandTests(CommandTestCase):
    def test_ideal_sweep(self):
        out = self.dir / 'fidelity.csv'
        stdout = self.call('fidelity_sweep', kind='ghz', mmax=5, trials=10, seed=0, out=str(out))
        values = [float(line.split('=')[1]) for line in stdout.splitlines() if line.startswith('F_')]
        self.assertEqual(len(values), 4)
        for value in values:
            self.assertAlmostEqual(value, 1.0, delta=1e-9)
        self.assertEqual(self.read_rows(out)[0], ['m', 'F', 'trials', 'seed'])

    def test_reruns_are_byte_identical(self):
        first, second = self.dir / 'a.csv', self.dir / 'b.csv'
        options = dict(kind='cluster', mmax=4, trials=25, seed=11, gate_err_deg=10.0, bath_err_deg=10.0)
        self.call('fidelity_sweep', out=str(first), **options)
        self.call('fidelity_sweep', out=str(second), **options)
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_negative_seed(self):
        with self.assertRaises(CommandError) as cm:
            self.call('fidelity_sweep', mmax=3, seed=-1, out=str(self.dir / 'x.csv'))
        self.assertEqual(cm.exception.returncode, 2)


class RatesCommandTests(CommandTestCase):
    def test_default_windows(self):
        out = self.dir / 'chains.csv'
        stdout = self.call('rates', seed=0, out=str(out))
        rows = self.read_rows(out)
        self.assertEqual(rows[0], ['length', 'count'])
        counts = {int(length): int(count) for length, count in rows[1:]}
        self.assertEqual(sum(counts.values()), 1000)
        at_least_five = sum(c for length, c in counts.items() if length >= 5)
        self.assertTrue(39 <= at_least_five <= 86)
        self.assertIn(f'windows with length >= 5: {at_least_five} of 1000', stdout)
        self.assertIn(f'longest chain: {max(counts)}', stdout)
        self.assertTrue((self.dir / 'chains_rates.csv').exists())

    def test_bad_target_length_writes_nothing(self):
        for options in ({'target_m': 0}, {'absorption_n': 0}):
            with self.subTest(**options):
                with self.assertRaises(CommandError) as cm:
                    self.call('rates', out=str(self.dir / 'chains.csv'), **options)
                self.assertEqual(cm.exception.returncode, 2)
                self.assertEqual(list(self.dir.iterdir()), [])

    def test_perfect_efficiencies(self):
        stdout = self.call('rates', zpl=1.0, collection=1.0, target_m=10, out=str(self.dir / 'chains.csv'))
        (line,) = [line for line in stdout.splitlines() if line.startswith('detected 10-photon rate')]
        self.assertAlmostEqual(float(line.split('=')[1].split()[0]), 19.53125, delta=1e-9)

    def test_absorption_table(self):
        stdout = self.call('rates', absorption_n=100, out=str(self.dir / 'chains.csv'))
        rows = self.read_rows(self.dir / 'chains_absorption.csv')
        self.assertEqual(rows[0], ['n', 'exact', 'printed', 'printed_gaussian', 'recentered'])
        self.assertEqual(len(rows), 102)
        self.assertIn('absorption peak: exact n=50, printed Gaussian n=100', stdout)

    def test_zero_repetitions(self):
        with self.assertRaises(CommandError) as cm:
            self.call('rates', reps=0, out=str(self.dir / 'chains.csv'))
        self.assertEqual(cm.exception.returncode, 2)


class LedgerTests(CommandTestCase):
    def test_runs_are_recorded_and_replayed(self):
        self.call('rates', seed=3, absorption_n=20, out=str(self.dir / 'chains.csv'))
        self.call('run', photons=2, trials=5, seed=3, out=str(self.dir / 'run.csv'))
        self.assertEqual(SimulationRun.objects.count(), 2)
        for run in SimulationRun.objects.all():
            self.assertEqual(len(run.output_sha256), 64)
            self.assertIn('byte-identical', self.call('replay', run_id=run.pk))

    def test_tampered_digest_fails_replay(self):
        self.call('run', photons=2, trials=3, out=str(self.dir / 'run.csv'))
        run = SimulationRun.objects.get()
        run.output_sha256 = '0' * 64
        run.save()
        with self.assertRaises(CommandError) as cm:
            self.call('replay', run_id=run.pk)
        self.assertEqual(cm.exception.returncode, 1)

    def test_unknown_run_id(self):
        with self.assertRaises(CommandError) as cm:
            self.call('replay', run_id=999)
        self.assertEqual(cm.exception.returncode, 2)

    def test_no_record_flag(self):
        self.call('run', photons=2, no_record=True, out=str(self.dir / 'run.csv'))
        self.assertFalse(SimulationRun.objects.exists())

    @override_settings(SIMULATOR_RECORD_RUNS=False)
    def test_recording_disabled(self):
        self.call('run', photons=2, out=str(self.dir / 'run.csv'))
        self.assertFalse(SimulationRun.objects.exists())


class CalibrateCommandTests(CommandTestCase):
    def test_ghz_search_report(self):
        stdout = self.call('calibrate', kind='ghz')
        self.assertIn('ghz: [', stdout)
        self.assertIn('schedules tried', stdout)
