import logging

from django.core.management.base import BaseCommand, CommandError

from simulator.core.calibration import CalibrationResult, calibrate_sequence, write_calibrated_module
from simulator.core.protocol import ProtocolKind, calibrated_sequence
from simulator.exceptions import CalibrationError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Re-run the exhaustive gate-schedule search and compare it with the frozen constants'

    def add_arguments(self, parser):
        parser.add_argument('--kind', choices=['all'] + [k.value for k in ProtocolKind], default='all')
        parser.add_argument('--write', action='store_true', help='Regenerate simulator/core/calibrated.py')

    def handle(self, *args, **options):
        kinds = list(ProtocolKind) if options['kind'] == 'all' else [ProtocolKind(options['kind'])]
        results = {}
        for kind in kinds:
            try:
                result = calibrate_sequence(kind)
            except CalibrationError as e:
                raise CommandError(str(e), returncode=1)
            results[kind.value] = result
            frozen_sequence, frozen_correction = calibrated_sequence(kind)
            matches = frozen_sequence == result.sequence and frozen_correction == result.correction
            self.stdout.write(
                f'{kind.value}: {result.sequence} correction {result.correction.to_dict()} '
                f'({result.schedules_tried} schedules tried)'
            )
            if matches:
                self.stdout.write(self.style.SUCCESS(f'{kind.value}: frozen constants match'))
            else:
                self.stdout.write(self.style.WARNING(
                    f'{kind.value}: frozen constants differ ({frozen_sequence}); run with --write to regenerate'
                ))

        if options['write']:
            missing = {k.value for k in ProtocolKind} - set(results)
            for name in sorted(missing):
                sequence, correction = calibrated_sequence(name)
                results[name] = CalibrationResult(ProtocolKind(name), sequence, correction, schedules_tried=0)
            path = write_calibrated_module(results)
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))

