"""Block Rayleigh fading and Shannon spectral efficiency."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import STREAM_CHANNEL, NetworkRealization, derive_rng

SNR_DB_RANGE = (5.0, 25.0)


@dataclass(frozen=True, eq=False)
class ChannelTrace:
    """Per-flow channel gains for one window.

    Fading is block-constant, so one gain per flow is stored; ``per_slot``
    expands it to the (flows, slots) view.
    """

    window_index: int
    gains: np.ndarray
    num_slots: int

    @property
    def per_slot(self) -> np.ndarray:
        return np.repeat(self.gains[:, None], self.num_slots, axis=1)


def sample_mean_snr(rng: np.random.Generator, size: Optional[int] = None,
                    snr_range: tuple[float, float] = SNR_DB_RANGE):
    """Large-scale mean SNR (dB), uniform over ``snr_range``."""
    return rng.uniform(*snr_range, size=size)


def sample_fading(realization: NetworkRealization, window_index: int,
                  rng: Optional[np.random.Generator] = None) -> ChannelTrace:
    config = realization.config
    if not 0 <= window_index < config.num_windows:
        raise ValueError(f"window index {window_index} outside [0, {config.num_windows})")
    if rng is None:
        rng = derive_rng(realization.channel_seed, STREAM_CHANNEL, window_index)
    snr_linear = 10.0 ** (realization.mean_snr_db / 10.0)
    fading = rng.exponential(1.0, size=realization.num_flows)
    return ChannelTrace(window_index, snr_linear * fading, config.num_slots)


def shannon_rate(h, sigma2: float = 1.0, base: float = 2.0):
    """Spectral efficiency log(1 + h / sigma2) in the given log base."""
    g = np.log1p(np.asarray(h, dtype=float) / sigma2)
    if base != np.e:
        g = g / np.log(base)
    return g
