"""
Validators for simulator inputs and run configurations
"""
import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

UNITARY_TOL = 1e-10
IDEMPOTENT_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-9


def validate_photon_count(m, minimum=1):
    """
    Validate a requested photon-chain length
    Allowed range: minimum .. SIMULATOR_MAX_PHOTONS
    """
    maximum = getattr(settings, 'SIMULATOR_MAX_PHOTONS', 12)
    if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
        raise ValidationError(f'Photon count must be an integer. Got: {m!r}')
    if m < minimum or m > maximum:
        raise ValidationError(f'Photon count must lie in [{minimum}, {maximum}]. Got: {m}')


def validate_probability(value, name):
    """Validate that a value is a probability in [0, 1]"""
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f'{name} must lie in [0, 1]. Got: {value}')


def validate_positive(value, name):
    if not value > 0:
        raise ValidationError(f'{name} must be positive. Got: {value}')


def validate_angle_bound(value, name):
    """Angle bounds (radians) must lie in [0, pi]"""
    if not 0.0 <= value <= np.pi:
        raise ValidationError(f'{name} must lie in [0, pi] radians. Got: {value}')


def validate_unitary(matrix):
    """
    Validate that a gate matrix is square, 2x2 or 4x4, and unitary within 1e-10
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] not in (2, 4):
        raise ValidationError(f'Gate must be a 2x2 or 4x4 matrix. Got shape: {matrix.shape}')
    deviation = np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))
    if deviation > UNITARY_TOL:
        raise ValidationError(f'Gate is not unitary (max deviation {deviation:.3e})')


def validate_projector(matrix):
    """Hermitian and idempotent within 1e-10"""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f'Projector must be a square matrix. Got shape: {matrix.shape}')
    if np.max(np.abs(matrix - matrix.conj().T)) > IDEMPOTENT_TOL:
        raise ValidationError('Projector is not Hermitian')
    if np.max(np.abs(matrix @ matrix - matrix)) > IDEMPOTENT_TOL:
        raise ValidationError('Projector is not idempotent (P^2 != P)')


def validate_orthonormal_basis(basis):
    """A measurement basis is a pair of orthonormal 2-vectors"""
    if len(basis) != 2:
        raise ValidationError(f'Measurement basis needs exactly two vectors. Got: {len(basis)}')
    gram = np.array([[np.vdot(u, v) for v in basis] for u in basis])
    if np.max(np.abs(gram - np.eye(2))) > UNITARY_TOL:
        raise ValidationError('Measurement basis is not orthonormal')


def validate_ensemble_weights(weights):
    """Weights must be non-negative and sum to 1 within 1e-9"""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValidationError('Ensemble weights must be non-negative')
    total = float(weights.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValidationError(f'Ensemble weights must sum to 1. Got: {total:.12f}')
