# Generated by Django 5.2.6 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(choices=[('run', 'Protocol runs'), ('fidelity_sweep', 'Fidelity sweep'), ('rates', 'Rate report')], db_index=True, max_length=32)),
                ('config', models.JSONField(help_text='Serialized RunConfig, seed included')),
                ('seed', models.BigIntegerField()),
                ('output_path', models.CharField(max_length=500)),
                ('output_sha256', models.CharField(max_length=64)),
                ('created_at', models.DateTimeField(auto_now_add=True, db_index=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['command', '-created_at'], name='simrun_command_date_idx')],
            },
        ),
    ]
