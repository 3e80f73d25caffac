"""
Noise configuration files

Plain `key=value` files read through python-decouple, e.g.

    gate_angle_max_deg=10
    bath_phase_max_deg=10
    # uniform | gaussian | explicit
    bath_mode=uniform
    hahn_echo=false
    tau_us=1
    # explicit mode: `x y z` table in nm
    bath_file=bath.txt

Optional keys: electron_phase_max_deg, bath_sigma_deg (gaussian mode),
bath_random_spins and bath_seed (explicit mode without a table),
hyperfine_a (rad/s). Angles are degrees here and radians everywhere else.
"""
import logging
from pathlib import Path

import numpy as np
from decouple import Choices, Config, RepositoryEnv, UndefinedValueError
from django.core.exceptions import ValidationError

from simulator.core.noise import BathConfig, BathMode, NoiseModel, load_bath_table, random_bath

logger = logging.getLogger(__name__)

KNOWN_KEYS = {
    'gate_angle_max_deg', 'bath_phase_max_deg', 'bath_mode', 'hahn_echo', 'tau_us', 'bath_file',
    'electron_phase_max_deg', 'bath_sigma_deg', 'bath_random_spins', 'bath_seed', 'hyperfine_a',
}


def _explicit_bath(config, base_dir, hyperfine_a):
    kwargs = {} if hyperfine_a is None else {'hyperfine_a': hyperfine_a}
    bath_file = config('bath_file', default='')
    if bath_file:
        table_path = Path(bath_file)
        if not table_path.is_absolute():
            table_path = base_dir / table_path
        if not table_path.exists():
            raise ValidationError(f'Bath file not found: {table_path}')
        return BathConfig(positions=load_bath_table(table_path), **kwargs)
    spins = config('bath_random_spins', default=0, cast=int)
    if spins <= 0:
        raise ValidationError('bath_mode=explicit needs bath_file or bath_random_spins')
    seed = config('bath_seed', default=0, cast=int)
    return random_bath(spins, np.random.default_rng(seed), hyperfine_a=hyperfine_a)


def load_noise_file(path, seed=None):
    """
    Build a NoiseModel from a key=value file

    Args:
        path: noise file path
        seed: master seed stored on the model

    Returns:
        NoiseModel
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f'Noise file not found: {path}')
    config = Config(RepositoryEnv(str(path)))
    unknown = set(config.repository.data) - KNOWN_KEYS
    if unknown:
        logger.warning(f'Ignoring unknown keys in {path}: {", ".join(sorted(unknown))}')

    try:
        bath_mode = BathMode(config('bath_mode', default='uniform',
                                    cast=Choices([mode.value for mode in BathMode])))
        hyperfine_a = config('hyperfine_a', default=None)
        hyperfine_a = float(hyperfine_a) if hyperfine_a is not None else None
        bath = _explicit_bath(config, path.parent, hyperfine_a) if bath_mode is BathMode.EXPLICIT else None
        model = NoiseModel(
            gate_angle_max=np.deg2rad(config('gate_angle_max_deg', default=0.0, cast=float)),
            bath_phase_max=np.deg2rad(config('bath_phase_max_deg', default=0.0, cast=float)),
            bath_mode=bath_mode,
            bath_sigma=np.deg2rad(config('bath_sigma_deg', default=0.0, cast=float)),
            electron_phase_max=np.deg2rad(config('electron_phase_max_deg', default=0.0, cast=float)),
            bath=bath,
            hahn_echo=config('hahn_echo', default=False, cast=bool),
            tau=config('tau_us', default=1.0, cast=float) * 1e-6,
            seed=seed,
        )
    except (ValueError, UndefinedValueError) as e:
        raise ValidationError(f'Invalid noise file {path}: {e}')
    logger.info(f'Loaded noise model from {path}: mode={model.bath_mode.value}, echo={model.hahn_echo}')
    return model
