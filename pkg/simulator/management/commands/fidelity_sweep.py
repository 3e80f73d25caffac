import argparse
import logging

import numpy as np
from django.core.exceptions import ValidationError

from simulator.core.noise import NoiseModel
from simulator.core.protocol import ProtocolKind, fidelity_curve
from simulator.utils.csv_output import format_real

from ._common import SimulatorCommand, dump_noise, load_noise, resolve_output

logger = logging.getLogger(__name__)


class Command(SimulatorCommand):
    help = 'Compute the fidelity F_m of post-selected noisy runs for m = 2..mmax and write it as CSV'
    ledger_name = 'fidelity_sweep'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--kind', choices=[k.value for k in ProtocolKind], default='ghz')
        parser.add_argument('--mmax', type=int, required=True)
        parser.add_argument('--trials', type=int, default=1000)
        parser.add_argument('--gate-err-deg', type=float, default=0.0, help='Gate rotation-angle error bound')
        parser.add_argument('--bath-err-deg', type=float, default=0.0, help='Nuclear phase bound per interval')
        parser.add_argument('--electron-err-deg', type=float, default=0.0, help='Electron phase bound per interval')
        parser.add_argument('--hahn-echo', action='store_true')
        parser.add_argument('--tau-us', type=float, default=1.0)
        parser.add_argument('--noise', default=None, help='key=value noise file; overrides the *-err-deg flags')
        parser.add_argument('--out', default=None, help='CSV path (default: SIMULATOR_OUTPUT_DIR/fidelity.csv)')
        parser.add_argument('--noise-json', default=None, help=argparse.SUPPRESS)

    def _noise_from_flags(self, options):
        return NoiseModel(
            gate_angle_max=float(np.deg2rad(options['gate_err_deg'])),
            bath_phase_max=float(np.deg2rad(options['bath_err_deg'])),
            electron_phase_max=float(np.deg2rad(options['electron_err_deg'])),
            hahn_echo=options['hahn_echo'],
            tau=options['tau_us'] * 1e-6,
            seed=options['seed'],
        )

    def simulate(self, **options):
        kind = ProtocolKind(options['kind'])
        seed = options['seed']
        if seed < 0:
            raise ValidationError(f'Seed must be non-negative. Got: {seed}')
        noise = load_noise(options['noise'], options['noise_json'], seed)
        if noise is None:
            noise = self._noise_from_flags(options)
        elif options['noise']:
            logger.info(f'Noise file {options["noise"]} overrides the error flags')
        out = resolve_output(options['out'], 'fidelity.csv')

        curve = fidelity_curve(kind, options['mmax'], noise, options['trials'], seed)
        digest = curve.write_csv(out)
        for m, fidelity in curve.points:
            self.stdout.write(f'F_{m} = {format_real(fidelity)}')
        self.stdout.write(self.style.SUCCESS(f'Wrote {out}'))

        config = {
            'options': {
                'kind': kind.value, 'mmax': options['mmax'], 'trials': options['trials'], 'seed': seed,
                'noise_json': dump_noise(noise),
            },
        }
        self.record(options, config, seed, out, digest)
