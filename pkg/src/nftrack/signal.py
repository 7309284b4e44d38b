"""OFDM subcarrier grid, thermal noise calibration, uplink block synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C0 = 299_792_458.0  # speed of light, m/s
K_B = 1.380649e-23  # Boltzmann constant, J/K


def noise_variance(temperature_k: float, delta_f: float, noise_figure_db: float) -> float:
    """Thermal noise power per subcarrier: k_B * T * delta_f * 10^(F/10), watts."""
    if temperature_k <= 0:
        raise ValueError(f"temperature must be positive, got {temperature_k}")
    if delta_f <= 0:
        raise ValueError(f"subcarrier spacing must be positive, got {delta_f}")
    return K_B * temperature_k * delta_f * 10.0 ** (noise_figure_db / 10.0)


def default_subcarriers(fc: float, bandwidth: float, m: int) -> list[float]:
    """M tracking subcarriers spread uniformly across the band, symmetric about fc.

    f_m = fc + (m - (M+1)/2) * (bandwidth / M)  for m = 1..M.
    """
    if m < 1:
        raise ValueError("need at least one subcarrier")
    step = bandwidth / m
    return [fc + (i - (m + 1) / 2.0) * step for i in range(1, m + 1)]


@dataclass(frozen=True)
class OfdmConfig:
    fc: float
    bandwidth: float
    delta_f: float
    m_subcarriers: int
    subcarrier_freqs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.fc <= 0 or self.bandwidth <= 0 or self.delta_f <= 0:
            raise ValueError("fc, bandwidth and delta_f must be positive")
        if self.m_subcarriers < 1:
            raise ValueError("m_subcarriers must be >= 1")
        freqs = self.subcarrier_freqs
        if not freqs:
            freqs = tuple(default_subcarriers(self.fc, self.bandwidth, self.m_subcarriers))
        else:
            freqs = tuple(float(f) for f in freqs)
        if len(freqs) != self.m_subcarriers:
            raise ValueError(
                f"expected {self.m_subcarriers} subcarriers, got {len(freqs)}"
            )
        lo = self.fc - self.bandwidth / 2.0
        hi = self.fc + self.bandwidth / 2.0
        for f in freqs:
            if not lo <= f <= hi:
                raise ValueError(f"subcarrier {f} Hz outside band [{lo}, {hi}]")
        object.__setattr__(self, "subcarrier_freqs", freqs)

    @property
    def wavelengths(self) -> tuple[float, ...]:
        return tuple(C0 / f for f in self.subcarrier_freqs)


@dataclass(frozen=True)
class SignalConfig:
    tx_power: float  # watts
    noise_figure_db: float
    temperature_k: float
    pilot: complex = 1.0 + 0.0j
    phase_error: str = "uniform"  # "uniform" | "none"
    noiseless: bool = False

    def __post_init__(self):
        if self.tx_power <= 0:
            raise ValueError(f"tx_power must be positive, got {self.tx_power}")
        if abs(abs(self.pilot) - 1.0) > 1e-12:
            raise ValueError(f"pilot must be unit modulus, got |x|={abs(self.pilot)}")
        if self.phase_error not in ("uniform", "none"):
            raise ValueError(f"unknown phase error model {self.phase_error!r}")

    def noise_var(self, ofdm: OfdmConfig) -> float:
        if self.noiseless:
            return 0.0
        return noise_variance(self.temperature_k, ofdm.delta_f, self.noise_figure_db)


@dataclass(frozen=True)
class RxBlock:
    values: np.ndarray  # (M, N) complex
    step_index: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 2:
            raise ValueError(f"rx block must be 2-D (M, N), got shape {v.shape}")
        if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
            raise ValueError("rx block contains non-finite entries")
        object.__setattr__(self, "values", v)


def synthesize_rx(
    k: int,
    channel: np.ndarray,
    sig: SignalConfig,
    ofdm: OfdmConfig,
    rng: np.random.Generator,
) -> RxBlock:
    """One uplink observation: scaled channel rows plus noise.

    Row m = sqrt(P/M) * h_m * pilot * exp(i phi_m) + w, with phi_m drawn
    i.i.d. uniform on [0, 2 pi) per subcarrier and w circularly-symmetric
    complex Gaussian with per-entry variance sigma_w^2 (real and imaginary
    parts each N(0, sigma_w^2 / 2)). The channel must come from the true
    position under the full surface set.
    """
    h = np.asarray(channel, dtype=np.complex128)
    m, n = h.shape
    if m != ofdm.m_subcarriers:
        raise ValueError(f"channel has {m} rows, expected {ofdm.m_subcarriers}")
    scale = math.sqrt(sig.tx_power / ofdm.m_subcarriers)
    if sig.phase_error == "uniform":
        phi = rng.uniform(0.0, 2.0 * math.pi, size=m)
    else:
        phi = np.zeros(m)
    z = scale * h * sig.pilot * np.exp(1j * phi)[:, None]
    var = sig.noise_var(ofdm)
    if var > 0.0:
        std = math.sqrt(var / 2.0)
        z = z + std * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
    return RxBlock(z, k)
