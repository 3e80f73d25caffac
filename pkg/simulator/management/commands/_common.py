"""
Shared plumbing for the simulator management commands
"""
import hashlib
import json
import logging
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from simulator.core.noise import NoiseModel
from simulator.exceptions import CalibrationError, ProtocolError
from simulator.models import SimulationRun
from simulator.utils.noise_files import load_noise_file

logger = logging.getLogger(__name__)

# argparse exits with 2 on bad flags; invalid values use the same code
EXIT_INVALID = 2
EXIT_INTERNAL = 1


def validation_message(error):
    return '; '.join(error.messages)


def resolve_output(out, default_name):
    """Explicit --out path, else SIMULATOR_OUTPUT_DIR/default_name"""
    if out:
        return Path(out)
    return Path(settings.SIMULATOR_OUTPUT_DIR) / default_name


def combined_sha256(paths):
    sha = hashlib.sha256()
    for path in paths:
        sha.update(Path(path).read_bytes())
    return sha.hexdigest()


def load_noise(noise_path=None, noise_json=None, seed=None):
    """NoiseModel from a serialized ledger entry, a noise file, or None for ideal runs"""
    if noise_json:
        return NoiseModel.from_dict(json.loads(noise_json))
    if noise_path:
        return load_noise_file(noise_path, seed=seed)
    return None


def dump_noise(noise):
    return json.dumps(noise.to_dict(), sort_keys=True) if noise is not None else None


class SimulatorCommand(BaseCommand):
    """
    Base class: maps domain failures onto exit codes and records the run ledger.

    Subclasses implement simulate(**options).
    """
    ledger_name = None

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=0, help='Master seed (default 0)')
        parser.add_argument('--no-record', action='store_true', help='Do not write a ledger row')

    def handle(self, *args, **options):
        try:
            return self.simulate(**options)
        except ValidationError as e:
            raise CommandError(validation_message(e), returncode=EXIT_INVALID)
        except (ProtocolError, CalibrationError) as e:
            logger.error(f'{self.ledger_name or "command"} failed: {e}')
            raise CommandError(f'Internal invariant violation: {e}', returncode=EXIT_INTERNAL)

    def simulate(self, **options):
        raise NotImplementedError

    def rng(self, seed, *stream):
        if seed < 0:
            raise ValidationError(f'Seed must be non-negative. Got: {seed}')
        return np.random.default_rng(np.random.SeedSequence([seed, *stream]))

    def record(self, options, config, seed, output_path, digest):
        if options.get('no_record'):
            return None
        return SimulationRun.record(self.ledger_name, config, seed, output_path, digest)
