import logging

from django.conf import settings
from django.core.exceptions import ValidationError

from simulator.core.stats import (
    RATE_HEADER,
    RateConfig,
    absorption_comparison,
    rate_report,
    rate_rows,
    simulate_sessions,
)
from simulator.utils.csv_output import write_csv
from simulator.validators import validate_positive

from ._common import SimulatorCommand, combined_sha256, resolve_output

logger = logging.getLogger(__name__)

PRESETS = {
    'cavity': ('SIMULATOR_CAVITY_ZPL', 'SIMULATOR_CAVITY_COLLECTION'),
    'no-cavity': ('SIMULATOR_NOCAVITY_ZPL', 'SIMULATOR_NOCAVITY_COLLECTION'),
}


class Command(SimulatorCommand):
    help = 'Simulate operation windows, write the chain-length histogram and an event-rate report'
    ledger_name = 'rates'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--tau-us', type=float, default=1.0, help='Photon spacing tau in microseconds')
        parser.add_argument('--window-us', type=float, default=100.0, help='Operation window t = N tau')
        parser.add_argument('--reps', type=int, default=1000, help='Number of windows simulated')
        parser.add_argument('--preset', choices=sorted(PRESETS), default='cavity',
                            help='Efficiency preset used for --zpl/--collection when not given')
        parser.add_argument('--zpl', type=float, default=None)
        parser.add_argument('--collection', type=float, default=None)
        parser.add_argument('--detector', type=float, default=1.0)
        parser.add_argument('--hadamard-loss', type=float, default=0.0,
                            help='Probability that the Hadamard leaks via |0>_e (lowers the pass rate)')
        parser.add_argument('--count-disentangling-photon', action='store_true',
                            help='Include the (m+1)th photon in the efficiency exponent')
        parser.add_argument('--target-m', type=int, default=10)
        parser.add_argument('--absorption-n', type=int, default=None,
                            help='Also tabulate the absorption-count laws for N driving photons')
        parser.add_argument('--out', default=None,
                            help='Histogram CSV path (default: SIMULATOR_OUTPUT_DIR/chains.csv)')

    def simulate(self, **options):
        zpl_key, collection_key = PRESETS[options['preset']]
        zpl = options['zpl'] if options['zpl'] is not None else getattr(settings, zpl_key)
        collection = options['collection'] if options['collection'] is not None else getattr(settings, collection_key)
        config = RateConfig(
            tau=options['tau_us'] * 1e-6,
            cycle_time=options['window_us'] * 1e-6,
            repetitions=options['reps'],
            zpl_fraction=zpl,
            collection_eff=collection,
            detector_eff=options['detector'],
            hadamard_loss=options['hadamard_loss'],
            count_disentangling_photon=options['count_disentangling_photon'],
        )
        seed = options['seed']
        target_m = options['target_m']
        absorption_n = options['absorption_n']
        if target_m < 1:
            raise ValidationError(f'--target-m must be at least 1. Got: {target_m}')
        if absorption_n is not None:
            validate_positive(absorption_n, '--absorption-n')
        out = resolve_output(options['out'], 'chains.csv')
        rates_out = out.with_name(f'{out.stem}_rates.csv')

        histogram = simulate_sessions(config, self.rng(seed))
        write_csv(out, ('length', 'count'), histogram.rows())
        write_csv(rates_out, RATE_HEADER, rate_rows(config, target_m))
        written = [out, rates_out]

        self.stdout.write(rate_report(config, target_m, histogram), ending='')
        for m in (5, 10):
            self.stdout.write(f'windows with length >= {m}: {histogram.count_at_least(m)} of {config.repetitions}')
        self.stdout.write(f'longest chain: {histogram.max_length()}')

        if absorption_n is not None:
            absorption_out = out.with_name(f'{out.stem}_absorption.csv')
            table = absorption_comparison(absorption_n)
            write_csv(absorption_out, ('n', 'exact', 'printed', 'printed_gaussian', 'recentered'), table)
            written.append(absorption_out)
            exact_peak = max(table, key=lambda row: row[1])[0]
            printed_peak = max(table, key=lambda row: row[3])[0]
            self.stdout.write(f'absorption peak: exact n={exact_peak}, printed Gaussian n={printed_peak}')
            if exact_peak != printed_peak:
                logger.warning(f'Printed Gaussian peaks at n={printed_peak}, binomial at n={exact_peak}')

        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))

        run_config = {
            'options': {
                'tau_us': options['tau_us'], 'window_us': options['window_us'], 'reps': options['reps'],
                'preset': options['preset'], 'zpl': zpl, 'collection': collection,
                'detector': options['detector'], 'hadamard_loss': options['hadamard_loss'],
                'count_disentangling_photon': options['count_disentangling_photon'],
                'target_m': target_m, 'absorption_n': absorption_n, 'seed': seed,
            },
        }
        self.record(options, run_config, seed, out, combined_sha256(written))
