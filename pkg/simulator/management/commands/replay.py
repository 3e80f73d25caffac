import logging
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

from simulator.models import SimulationRun

from ._common import EXIT_INTERNAL, EXIT_INVALID, combined_sha256

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Re-execute a recorded run into a scratch file and check the output is byte-identical'

    def add_arguments(self, parser):
        parser.add_argument('--run-id', type=int, required=True)

    def handle(self, *args, **options):
        try:
            run = SimulationRun.objects.get(pk=options['run_id'])
        except SimulationRun.DoesNotExist:
            raise CommandError(f'No recorded run with id {options["run_id"]}', returncode=EXIT_INVALID)

        with tempfile.TemporaryDirectory() as scratch:
            out = Path(scratch) / Path(run.output_path).name
            call_command(run.command, stdout=StringIO(), out=str(out), no_record=True, **run.config['options'])
            paths = sorted(Path(scratch).iterdir(), key=_written_order(out))
            digest = combined_sha256(paths)

        if digest != run.output_sha256:
            logger.warning(f'Replay of {run} differs: {digest[:12]} != {run.output_sha256[:12]}')
            raise CommandError(f'Replay of run {run.pk} is NOT byte-identical', returncode=EXIT_INTERNAL)
        self.stdout.write(self.style.SUCCESS(f'Replay of run {run.pk} ({run.command}) is byte-identical'))


def _written_order(main_output):
    """The main output first, then derived files in the order the rates command writes them"""
    suffix_rank = {'': 0, '_rates': 1, '_absorption': 2}

    def key(path):
        suffix = path.stem[len(main_output.stem):]
        return suffix_rank.get(suffix, len(suffix_rank)), path.name
    return key
