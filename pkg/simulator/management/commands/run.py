import argparse
import logging

import numpy as np
from django.core.exceptions import ValidationError

from simulator.core.protocol import ProtocolKind, run_protocol, stabilizer_expectations, stabilizers_for
from simulator.utils.csv_output import format_real, write_csv

from ._common import SimulatorCommand, dump_noise, load_noise, resolve_output

logger = logging.getLogger(__name__)

# The closing 'summary' row leaves branch empty and holds means of achieved_m, fidelity
# (completed runs only) and bright_passes, the total of attempts and the count of completed runs.
HEADER = ('trial', 'achieved_m', 'branch', 'fidelity', 'attempts', 'bright_passes', 'completed')


class Command(SimulatorCommand):
    help = 'Run the photon-string protocol T times and write per-trial outcomes as CSV'
    ledger_name = 'run'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--kind', choices=[k.value for k in ProtocolKind], default='ghz')
        parser.add_argument('--photons', type=int, required=True, help='Requested chain length m')
        parser.add_argument('--trials', type=int, default=1)
        parser.add_argument('--noise', default=None, help='key=value noise file (ideal when omitted)')
        parser.add_argument('--post-select', action='store_true',
                            help='Retry shelved runs until every bright/dark filter passes')
        parser.add_argument('--out', default=None, help='CSV path (default: SIMULATOR_OUTPUT_DIR/run.csv)')
        parser.add_argument('--noise-json', default=None, help=argparse.SUPPRESS)

    def simulate(self, **options):
        kind = ProtocolKind(options['kind'])
        m = options['photons']
        trials = options['trials']
        seed = options['seed']
        if trials < 1:
            raise ValidationError(f'--trials must be at least 1. Got: {trials}')
        noise = load_noise(options['noise'], options['noise_json'], seed)
        out = resolve_output(options['out'], 'run.csv')

        logger.info(f'run kind={kind.value} m={m} trials={trials} seed={seed} post_select={options["post_select"]}')
        rows, outcomes = [], []
        for trial in range(trials):
            outcome = run_protocol(kind, m, noise, self.rng(seed, trial), post_select_bright=options['post_select'])
            outcomes.append(outcome)
            rows.append((trial, outcome.achieved_m, outcome.nuclear_branch, outcome.fidelity_vs_ideal,
                         outcome.attempts, outcome.bright_passes, int(not outcome.shelved_early)))

        completed = [o for o in outcomes if not o.shelved_early]
        mean_fidelity = float(np.mean([o.fidelity_vs_ideal for o in completed])) if completed else None
        rows.append(('summary', float(np.mean([o.achieved_m for o in outcomes])), None,
                     mean_fidelity, int(sum(o.attempts for o in outcomes)),
                     float(np.mean([o.bright_passes for o in outcomes])), len(completed)))
        digest = write_csv(out, HEADER, rows)

        self.stdout.write(f'{len(completed)}/{trials} runs reached m={m}')
        if mean_fidelity is not None:
            self.stdout.write(f'mean fidelity = {format_real(mean_fidelity)}')
            for generator, low, high in self._stabilizer_report(kind, m, completed):
                self.stdout.write(f'stabilizer {generator}: min {format_real(low)} max {format_real(high)}')
        else:
            # each of the m + 1 filters passes with probability 1/2
            self.stdout.write(self.style.WARNING(
                f'No run reached m={m}, stabilizer report skipped '
                f'(a run completes with probability 2^-{m + 1}; use --post-select to retry shelved runs)'
            ))
        self.stdout.write(self.style.SUCCESS(f'Wrote {out}'))

        config = {
            'options': {
                'kind': kind.value, 'photons': m, 'trials': trials, 'seed': seed,
                'post_select': options['post_select'], 'noise_json': dump_noise(noise),
            },
        }
        self.record(options, config, seed, out, digest)

    def _stabilizer_report(self, kind, m, completed):
        generators = stabilizers_for(kind, m)
        values = np.array([stabilizer_expectations(o.photon_state, generators) for o in completed])
        return [(g, values[:, i].min(), values[:, i].max()) for i, g in enumerate(generators)]
