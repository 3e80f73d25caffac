"""
Classical session statistics.

A session is one operation window t = N tau. The first cycle always passes
(the prepared electron is exactly bright); every later cycle passes the
bright/dark filter with probability p = 0.5 (1 - hadamard_loss) and a failure
ends the chain. Hence P(length >= m) = p^(m-1), i.e. 2^(1-m) without loss.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from scipy.special import gammaln
from scipy.stats import binom

from simulator.validators import validate_positive, validate_probability

logger = logging.getLogger(__name__)

BRIGHT_PROBABILITY = 0.5

# Published order-of-magnitude estimates: {chain length: (events per second, description)}
REFERENCE_RATES = {
    10: (1.0, 'ten-photon entangled state per second with a cavity'),
    2: (1e-2, 'two-photon event every ~100 s without a cavity'),
}


@dataclass(frozen=True)
class RateConfig:
    """
    Session timing (seconds) and per-photon efficiencies.

    count_disentangling_photon adds the (m+1)th photon to the efficiency exponent.
    """
    tau: float
    cycle_time: float
    repetitions: int
    zpl_fraction: float = 1.0
    collection_eff: float = 1.0
    detector_eff: float = 1.0
    hadamard_loss: float = 0.0
    count_disentangling_photon: bool = False

    def __post_init__(self):
        validate_positive(self.tau, 'tau')
        validate_positive(self.cycle_time, 'cycle_time')
        if self.cycle_time < self.tau:
            raise ValidationError(f'cycle_time ({self.cycle_time}) must be at least tau ({self.tau})')
        if not isinstance(self.repetitions, (int, np.integer)) or self.repetitions < 1:
            raise ValidationError(f'repetitions must be a positive integer. Got: {self.repetitions!r}')
        for name in ('zpl_fraction', 'collection_eff', 'detector_eff', 'hadamard_loss'):
            validate_probability(getattr(self, name), name)

    @property
    def slots(self):
        """N = round(cycle_time / tau), photon slots per window."""
        return max(1, int(round(self.cycle_time / self.tau)))

    @property
    def success_probability(self):
        return BRIGHT_PROBABILITY * (1.0 - self.hadamard_loss)

    @property
    def photon_efficiency(self):
        return self.zpl_fraction * self.collection_eff * self.detector_eff

    @classmethod
    def cavity(cls, tau, cycle_time, repetitions, **kwargs):
        return cls(tau, cycle_time, repetitions, zpl_fraction=settings.SIMULATOR_CAVITY_ZPL,
                   collection_eff=settings.SIMULATOR_CAVITY_COLLECTION, **kwargs)

    @classmethod
    def no_cavity(cls, tau, cycle_time, repetitions, **kwargs):
        return cls(tau, cycle_time, repetitions, zpl_fraction=settings.SIMULATOR_NOCAVITY_ZPL,
                   collection_eff=settings.SIMULATOR_NOCAVITY_COLLECTION, **kwargs)

    def to_dict(self):
        return {
            'tau': self.tau,
            'cycle_time': self.cycle_time,
            'repetitions': int(self.repetitions),
            'zpl_fraction': self.zpl_fraction,
            'collection_eff': self.collection_eff,
            'detector_eff': self.detector_eff,
            'hadamard_loss': self.hadamard_loss,
            'count_disentangling_photon': self.count_disentangling_photon,
        }


@dataclass
class ChainHistogram:
    repetitions: int
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.repetitions:
            raise ValidationError(f'Histogram counts sum to {total}, expected {self.repetitions}')

    def count_at_least(self, m):
        return sum(count for length, count in self.counts.items() if length >= m)

    def probability_at_least(self, m):
        return self.count_at_least(m) / self.repetitions

    def rows(self):
        return sorted(self.counts.items())

    def max_length(self):
        return max(self.counts) if self.counts else 0


def p_chain(m, success_prob=BRIGHT_PROBABILITY):
    """Probability that a window reaches chain length m: exp(-(m-1) ln 2) for p = 1/2."""
    if m < 1:
        raise ValidationError(f'Chain length must be at least 1. Got: {m}')
    validate_probability(success_prob, 'success_prob')
    return float(success_prob ** (m - 1))


def _check_counts(N, n):
    if N < 0 or not 0 <= n <= N:
        raise ValidationError(f'Need 0 <= n <= N. Got: N={N}, n={n}')


def absorption_count_exact(N, n):
    """Probability that n of N driving photons are absorbed: C(N, n) 2^-N."""
    _check_counts(N, n)
    return float(binom.pmf(n, N, 0.5))


def absorption_count_gaussian(N, n):
    """The printed Gaussian (2/sqrt(pi N)) exp(-2 (N - n)^2 / N), peaked at n = N."""
    validate_positive(N, 'N')
    return float(2 / np.sqrt(np.pi * N) * np.exp(-2 * (N - n) ** 2 / N))


def absorption_count_recentered(N, n):
    """de Moivre-Laplace form sqrt(2/(pi N)) exp(-2 (n - N/2)^2 / N)."""
    validate_positive(N, 'N')
    return float(np.sqrt(2 / (np.pi * N)) * np.exp(-2 * (n - N / 2) ** 2 / N))


def absorption_count_printed(N, n):
    """The printed factorial form N! / ((N - n)! (N + n)!); not a normalized pmf."""
    _check_counts(N, n)
    return float(np.exp(gammaln(N + 1) - gammaln(N - n + 1) - gammaln(N + n + 1)))


def absorption_comparison(N):
    """Rows (n, exact, printed, printed_gaussian, recentered) for n = 0..N."""
    validate_positive(N, 'N')
    return [
        (n, absorption_count_exact(N, n), absorption_count_printed(N, n),
         absorption_count_gaussian(N, n), absorption_count_recentered(N, n))
        for n in range(N + 1)
    ]


def simulate_sessions(config, rng):
    """
    Monte Carlo chain lengths over config.repetitions windows.

    Length = cycles until the first failed filter (first cycle always passes),
    capped at the N slots of the window.
    """
    p = config.success_probability
    lengths = np.minimum(rng.geometric(1.0 - p, size=config.repetitions), config.slots)
    counts = Counter(int(length) for length in lengths)
    return ChainHistogram(repetitions=config.repetitions, counts=dict(sorted(counts.items())))


def photons_in_exponent(config, m):
    return m + 1 if config.count_disentangling_photon else m


def detected_event_rate(config, m):
    """(1/cycle_time) p_chain(m) (zpl collection detector)^m, events per second."""
    window_rate = 1.0 / config.cycle_time
    return window_rate * p_chain(m, config.success_probability) * config.photon_efficiency ** photons_in_exponent(config, m)


def rate_rows(config, max_m):
    """Rows (m, rate_hz, p_chain, window_rate_hz, zpl, collection, detector, photons_in_exponent)."""
    return [
        (m, detected_event_rate(config, m), p_chain(m, config.success_probability), 1.0 / config.cycle_time,
         config.zpl_fraction, config.collection_eff, config.detector_eff, photons_in_exponent(config, m))
        for m in range(1, max_m + 1)
    ]


RATE_HEADER = ('m', 'rate_hz', 'p_chain', 'window_rate_hz', 'zpl_fraction', 'collection_eff',
               'detector_eff', 'photons_in_exponent')


def reference_check(m, rate):
    """Compare a computed rate with the published estimate for m; None when there is none."""
    if m not in REFERENCE_RATES:
        return None
    reference, description = REFERENCE_RATES[m]
    ratio = rate / reference
    consistent = 0.1 <= ratio <= 10.0
    verdict = 'order-of-magnitude consistent' if consistent else 'NOT within an order of magnitude'
    if not consistent:
        logger.warning(f'Rate {rate:.3g}/s for m={m} vs reference {reference:g}/s ({description})')
    return f'reference estimate ({description}): {reference:g}/s; computed/reference = {ratio:.3g} -> {verdict}'


def rate_report(config, m, histogram=None):
    """Human-readable report: formula, assumptions, analytic and Monte Carlo numbers."""
    rate = detected_event_rate(config, m)
    exponent = photons_in_exponent(config, m)
    lines = [
        '# rate = (1 / cycle_time) * p_chain(m) * (zpl_fraction * collection_eff * detector_eff)^k',
        f'# p_chain(m) = p^(m-1), p = 0.5 * (1 - hadamard_loss) = {config.success_probability:g}',
        f'# k = {exponent} ({"m + 1, disentangling photon counted" if config.count_disentangling_photon else "m"})',
        '# assumptions: first cycle always bright; failures end the chain; no dead time between windows;',
        '#              per-photon efficiencies multiply independently; detector dark counts ignored',
        f'tau = {config.tau:g} s, cycle_time = {config.cycle_time:g} s, slots N = {config.slots}, '
        f'repetitions = {config.repetitions}',
        f'zpl_fraction = {config.zpl_fraction:g}, collection_eff = {config.collection_eff:g}, '
        f'detector_eff = {config.detector_eff:g}, hadamard_loss = {config.hadamard_loss:g}',
        f'p_chain({m}) = {p_chain(m, config.success_probability):.17g}',
        f'expected windows with length >= {m}: {config.repetitions * p_chain(m, config.success_probability):.17g}',
    ]
    if histogram is not None:
        lines.append(f'monte carlo windows with length >= {m}: {histogram.count_at_least(m)}')
    lines.append(f'detected {m}-photon rate = {rate:.17g} events/s')
    if rate > 0:
        lines.append(f'mean time between events = {1 / rate:.6g} s')
    check = reference_check(m, rate)
    if check:
        lines.append(check)
    return '\n'.join(lines) + '\n'
