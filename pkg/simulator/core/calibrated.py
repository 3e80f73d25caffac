# Generated by `python manage.py calibrate --write`. Do not edit by hand.
#
# Per-cycle gate schedules (one tuple per period slot) and branch corrections
# found by the exhaustive sequence search.

CALIBRATED = {
    'ghz': {
        'schedule': (('H', 'CX'),),
        'correction': {'first_phase': 'I', 'last_phases': ('I',), 'pauli': 'Z', 'pauli_on': 'first'},
    },
    'cluster': {
        'schedule': (('H', 'CX'), ('H', 'CY')),
        'correction': {'first_phase': 'SDG', 'last_phases': ('S', 'SDG'), 'pauli': 'Z', 'pauli_on': 'last'},
    },
}
