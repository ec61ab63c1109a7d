"""OFDM waveform configuration, near-field array responses, spatially white
transmit frame generation, and noisy echo synthesis.

The per-subcarrier discrete model is
    Y_m = beta * a_m a_m^T X_m + Z_m,
with a_m the near-field response vector at the m-th subcarrier frequency,
X_m the known N x L transmit matrix with spatially white covariance
(P/N) * I, and Z_m circularly symmetric white Gaussian noise.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    TargetLocation,
    propagation_distances,
)

_FRAME_MAGIC = b"NFSF"
_FRAME_VERSION = 1
_FRAME_LAYOUT_NOTE = b"X then Y float64 re,im pairs; subcarrier-major; col-major NxL"


class ChannelModel(enum.Enum):
    """Response model selector: pure phase curvature, or phase plus the
    1/r_n amplitude roll-off normalized by the mean element distance."""

    PHASE_ONLY = "phase"
    AMPLITUDE_PHASE = "accurate"


@dataclass(frozen=True)
class OfdmConfig:
    """OFDM numerology: carrier frequency, subcarrier count and spacing, and
    symbol count. Subcarriers are centered on the carrier, at offsets
    delta_m = (2m - M + 1)/2 times the spacing for m = 0..M-1."""

    f_c: float
    n_subcarriers: int
    delta_f: float
    n_symbols: int

    def __post_init__(self):
        if not self.f_c > 0:
            raise ValueError("carrier frequency must be > 0")
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if not self.delta_f > 0:
            raise ValueError("subcarrier spacing must be > 0")
        if self.n_symbols < 1:
            raise ValueError("n_symbols must be >= 1")
        if self.f_c - (self.n_subcarriers - 1) * self.delta_f / 2.0 <= 0:
            raise ValueError("lowest subcarrier frequency must be > 0")

    @property
    def bandwidth(self) -> float:
        return self.n_subcarriers * self.delta_f

    @property
    def carrier_wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def subcarrier_offsets(self) -> np.ndarray:
        m = np.arange(self.n_subcarriers, dtype=float)
        return (2.0 * m - self.n_subcarriers + 1.0) / 2.0

    @property
    def subcarrier_frequencies(self) -> np.ndarray:
        return self.f_c + self.subcarrier_offsets * self.delta_f

    @property
    def wavenumbers(self) -> np.ndarray:
        """k_m = 2 pi f_m / c for every subcarrier."""
        return 2.0 * math.pi * self.subcarrier_frequencies / SPEED_OF_LIGHT

    @property
    def m1(self) -> float:
        """First frequency moment, sum_m f_m = M * f_c."""
        return self.n_subcarriers * self.f_c

    @property
    def m2(self) -> float:
        """Second frequency moment, sum_m f_m^2."""
        m = float(self.n_subcarriers)
        return m * self.f_c**2 + m * (m**2 - 1.0) / 12.0 * self.delta_f**2

    @property
    def moment_deficit(self) -> float:
        """M*m2 - 2*m1^2, evaluated in factored form to avoid the
        catastrophic f_c^2 cancellation of the naive expression. Negative
        whenever 12 f_c^2 exceeds B^2 - delta_f^2 (the practical regime)."""
        m = float(self.n_subcarriers)
        return m**2 * ((m**2 - 1.0) / 12.0 * self.delta_f**2 - self.f_c**2)

    @property
    def band_term(self) -> float:
        """12 f_c^2 + B^2 - delta_f^2, the frequency factor common to the
        closed-form bound denominators."""
        return 12.0 * self.f_c**2 + self.bandwidth**2 - self.delta_f**2


def array_response(
    geom: ArrayGeometry,
    ofdm: OfdmConfig,
    m: int,
    loc: TargetLocation,
    model: ChannelModel,
) -> np.ndarray:
    """Length-N response vector at subcarrier m for a target at loc."""
    if not 0 <= m < ofdm.n_subcarriers:
        raise IndexError(f"subcarrier index {m} out of range")
    return response_matrix(geom, ofdm, loc, model)[m]


def response_matrix(
    geom: ArrayGeometry,
    ofdm: OfdmConfig,
    loc: TargetLocation,
    model: ChannelModel,
) -> np.ndarray:
    """All subcarrier response vectors stacked as an (M, N) complex matrix.

    Phase-only entries are exp(-j k_m r_n); the amplitude+phase model scales
    entry n by r0/r_n with r0 the mean element distance.
    """
    rn = propagation_distances(geom, loc)
    if np.any(rn == 0.0):
        from .geometry import DegenerateGeometry

        raise DegenerateGeometry("target coincides with an antenna element")
    phases = np.exp(-1j * ofdm.wavenumbers[:, None] * rn[None, :])
    if model is ChannelModel.AMPLITUDE_PHASE:
        phases *= (rn.mean() / rn)[None, :]
    return phases


def generate_transmit_frame(
    ofdm: OfdmConfig,
    geom: ArrayGeometry,
    power: float,
    seed: int,
    stream: int = 0,
) -> np.ndarray:
    """Spatially white transmit frame, shape (M, N, L) complex128.

    Entries are i.i.d. circularly symmetric Gaussian with variance P/N, so
    the per-subcarrier covariance is (P/N) * I. Each (stream, subcarrier)
    pair draws from its own counter-seeded generator, which makes frames
    reproducible independently of evaluation order or threading.
    """
    if not power > 0:
        raise ValueError("transmit power must be > 0")
    n, m, ell = geom.n_antennas, ofdm.n_subcarriers, ofdm.n_symbols
    scale = math.sqrt(power / (2.0 * n))
    x = np.empty((m, n, ell), dtype=np.complex128)
    for sub in range(m):
        rng = _stream_rng(seed, stream, sub, 0)
        x[sub] = scale * (
            rng.standard_normal((n, ell)) + 1j * rng.standard_normal((n, ell))
        )
    return x


def synthesize_echo(
    x: np.ndarray,
    scenario,
    seed: int,
    stream: int = 0,
    model: ChannelModel | None = None,
) -> np.ndarray:
    """Noisy target echo Y_m = beta a_m a_m^T X_m + Z_m, shape (M, N, L).

    Noiseless when the scenario noise power is zero. Noise streams are
    seeded per (stream, subcarrier), independent of the transmit streams.
    """
    model = model or scenario.model
    ofdm, geom = scenario.ofdm, scenario.geometry
    m, n, ell = x.shape
    if (m, n, ell) != (ofdm.n_subcarriers, geom.n_antennas, ofdm.n_symbols):
        raise ValueError("transmit frame shape does not match the scenario")
    a = response_matrix(geom, ofdm, scenario.target, model)
    # beta * a (a^T X) per subcarrier
    y = scenario.beta * a[:, :, None] * np.einsum("mn,mnl->ml", a, x)[:, None, :]
    if scenario.noise_power > 0:
        nscale = math.sqrt(scenario.noise_power / 2.0)
        for sub in range(m):
            rng = _stream_rng(seed, stream, sub, 1)
            y[sub] += nscale * (
                rng.standard_normal((n, ell)) + 1j * rng.standard_normal((n, ell))
            )
    return y


def _stream_rng(seed: int, stream: int, subcarrier: int, role: int) -> np.random.Generator:
    """Counter-style generator for one (trial stream, subcarrier, role)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream, subcarrier, role))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class SignalFrame:
    """One OFDM sensing frame: transmit matrices, received echoes, and the
    scenario snapshot they were generated from. Treated as immutable after
    construction."""

    x: np.ndarray
    y: np.ndarray
    scenario: "Scenario" = field(repr=False)

    @property
    def n_antennas(self) -> int:
        return self.x.shape[1]

    @property
    def n_subcarriers(self) -> int:
        return self.x.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.x.shape[2]


def simulate_frame(
    scenario,
    seed: int,
    stream: int = 0,
    model: ChannelModel | None = None,
) -> SignalFrame:
    """Generate the transmit frame and its echo for one Monte-Carlo stream."""
    x = generate_transmit_frame(
        scenario.ofdm, scenario.geometry, scenario.power, seed, stream
    )
    y = synthesize_echo(x, scenario, seed, stream, model)
    return SignalFrame(x=x, y=y, scenario=scenario)


def write_frame(path, frame: SignalFrame) -> None:
    """Dump a frame to the little-endian NFSF binary layout.

    Header: magic 'NFSF', version u32, N, M, L u32, then a 64-byte layout
    note. Payload: X then Y as float64 (re, im) pairs, subcarrier-major,
    column-major within each N x L matrix.
    """
    m, n, ell = frame.x.shape
    header = _FRAME_MAGIC + struct.pack("<IIII", _FRAME_VERSION, n, m, ell)
    header += _FRAME_LAYOUT_NOTE.ljust(64, b"\x00")
    with open(path, "wb") as fh:
        fh.write(header)
        for block in (frame.x, frame.y):
            for sub in range(m):
                flat = np.asfortranarray(block[sub]).ravel(order="F")
                out = np.empty(2 * flat.size)
                out[0::2] = flat.real
                out[1::2] = flat.imag
                fh.write(out.astype("<f8").tobytes())


def read_frame(path, scenario=None) -> SignalFrame:
    """Read a frame written by write_frame. The scenario snapshot is not
    stored in the file; pass it back in if downstream estimation needs it."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _FRAME_MAGIC:
            raise ValueError("not an NFSF frame file")
        version, n, m, ell = struct.unpack("<IIII", fh.read(16))
        if version != _FRAME_VERSION:
            raise ValueError(f"unsupported NFSF version {version}")
        fh.read(64)
        blocks = []
        for _ in range(2):
            block = np.empty((m, n, ell), dtype=np.complex128)
            for sub in range(m):
                raw = np.frombuffer(fh.read(16 * n * ell), dtype="<f8")
                flat = raw[0::2] + 1j * raw[1::2]
                block[sub] = flat.reshape((n, ell), order="F")
            blocks.append(block)
    return SignalFrame(x=blocks[0], y=blocks[1], scenario=scenario)
