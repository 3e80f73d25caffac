import json
import logging

from django.conf import settings
from django.db import DatabaseError, models

logger = logging.getLogger(__name__)


class SimulationRun(models.Model):
    """Ledger entry for one management-command invocation; enough to replay it"""
    COMMAND_CHOICES = [
        ('run', 'Protocol runs'),
        ('fidelity_sweep', 'Fidelity sweep'),
        ('rates', 'Rate report'),
    ]

    command = models.CharField(max_length=32, choices=COMMAND_CHOICES, db_index=True)
    config = models.JSONField(help_text='Serialized RunConfig, seed included')
    seed = models.BigIntegerField()
    output_path = models.CharField(max_length=500)
    output_sha256 = models.CharField(max_length=64)
    created_at = models.DateTimeField(auto_now_add=True, db_index=True)

    class Meta:
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['command', '-created_at'], name='simrun_command_date_idx'),
        ]

    def __str__(self):
        return f'{self.command} #{self.pk} (seed {self.seed})'

    @classmethod
    def record(cls, command, config, seed, output_path, output_sha256):
        """
        Store a ledger row if recording is enabled

        Returns the saved row, or None when recording is off or the table is missing.
        """
        if not settings.SIMULATOR_RECORD_RUNS:
            return None
        try:
            run = cls.objects.create(
                command=command,
                config=json.loads(json.dumps(config)),
                seed=seed,
                output_path=str(output_path),
                output_sha256=output_sha256,
            )
        except DatabaseError as e:
            logger.warning(f'Run ledger unavailable, not recording {command}: {e}')
            return None
        logger.info(f'Recorded {run}')
        return run
