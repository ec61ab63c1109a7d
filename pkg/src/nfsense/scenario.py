"""Scenario bundle: geometry, waveform, target, gain, and noise levels."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import SPEED_OF_LIGHT, ArrayGeometry, TargetLocation
from .signal import ChannelModel, OfdmConfig

WAVENUMBER_PER_HZ = 2.0 * math.pi / SPEED_OF_LIGHT


@dataclass(frozen=True)
class Scenario:
    """Everything needed to synthesize an echo or evaluate a bound for one
    sensing setup. The per-subcarrier transmit power P and the noise power
    sigma_w^2 define SNR = P / sigma_w^2."""

    geometry: ArrayGeometry
    ofdm: OfdmConfig
    target: TargetLocation
    beta: complex
    noise_power: float
    power: float = 1.0
    model: ChannelModel = ChannelModel.PHASE_ONLY

    def __post_init__(self):
        if self.noise_power < 0:
            raise ValueError("noise power must be >= 0")
        if not self.power > 0:
            raise ValueError("transmit power must be > 0")

    @property
    def snr_db(self) -> float:
        if self.noise_power == 0:
            raise ValueError("SNR undefined for zero noise power")
        return 10.0 * math.log10(self.power / self.noise_power)

    @property
    def rho(self) -> float:
        """Composite SNR factor k_0^2 |beta|^2 P / sigma_w^2 appearing in all
        bound expressions (k_0 = 2 pi / c)."""
        if self.noise_power == 0:
            raise ValueError("rho undefined for zero noise power")
        return (
            WAVENUMBER_PER_HZ**2 * abs(self.beta) ** 2 * self.power / self.noise_power
        )

    def with_target(self, theta: float, r: float) -> "Scenario":
        return replace(self, target=TargetLocation(theta=theta, r=r))

    def with_snr_db(self, snr_db: float) -> "Scenario":
        """Same scenario with the noise power set to P / 10^(snr/10)."""
        return replace(self, noise_power=self.power / 10.0 ** (snr_db / 10.0))
