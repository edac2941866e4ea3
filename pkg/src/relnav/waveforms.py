"""LFM chirp synthesis and the per-mode template bank.

The beacon broadcasts one of four 20 ms linear frequency-modulated chirps at
37.5 kS/s; each receiver holds replicas of all four so it can both range and
identify the commanded mode. Two auxiliary low-band chirps model the
long-baseline reference transmitters used for validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal.windows import tukey

SAMPLE_RATE = 37500.0

# (mode, f_start Hz, f_end Hz, duration s) for the four command chirps.
DEFAULT_MODE_CHIRPS = [
    (1, 7000.0, 9000.0, 0.020),
    (2, 10000.0, 8000.0, 0.020),
    (3, 8000.0, 6000.0, 0.020),
    (4, 9000.0, 11000.0, 0.020),
]

# Auxiliary long-baseline reference chirps (east, west transmitters).
LBL_CHIRPS = {
    "lbl_east": (5000.0, 2000.0, 0.020),
    "lbl_west": (250.0, 1500.0, 0.020),
}

TUKEY_ALPHA = 0.1


@dataclass(frozen=True)
class Waveform:
    """Peak-normalized sampled waveform with its nominal sweep band."""

    samples: np.ndarray
    sample_rate: float
    band: tuple[float, float]
    duration: float

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def band_lo(self) -> float:
        return min(self.band)

    @property
    def band_hi(self) -> float:
        return max(self.band)

    @property
    def sweep_sign(self) -> int:
        f0, f1 = self.band
        return (f1 > f0) - (f1 < f0)


def synth_lfm_chirp(f_start: float, f_end: float, duration: float,
                    sample_rate: float = SAMPLE_RATE) -> Waveform:
    """Synthesize a Tukey-windowed LFM chirp sweeping f_start to f_end.

    Phase is zero at t = 0 and the instantaneous frequency is linear in
    time, so the sweep midpoint sits at (f_start + f_end) / 2. The output
    is peak-normalized to 1.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    for f in (f_start, f_end):
        if not 0 < f < sample_rate / 2:
            raise ValueError(f"frequency {f} Hz violates Nyquist for {sample_rate} S/s")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    rate = (f_end - f_start) / duration
    phase = 2.0 * np.pi * (f_start * t + 0.5 * rate * t * t)
    samples = np.cos(phase) * tukey(n, TUKEY_ALPHA)
    samples = samples / np.max(np.abs(samples))
    return Waveform(samples=samples, sample_rate=sample_rate,
                    band=(f_start, f_end), duration=duration)


@dataclass(frozen=True)
class TemplateBank:
    """Ordered map of mode id to replica waveform, plus auxiliary entries."""

    entries: dict[int, Waveform]
    aux: dict[str, Waveform] = field(default_factory=dict)

    def __getitem__(self, mode: int) -> Waveform:
        return self.entries[mode]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def modes(self) -> list[int]:
        return sorted(self.entries)

    @property
    def sample_rate(self) -> float:
        return next(iter(self.entries.values())).sample_rate


def _measured_band(w: Waveform) -> tuple[float, float]:
    """Empirical -3 dB band edges of a waveform's power spectrum."""
    nfft = 1 << int(np.ceil(np.log2(4 * w.n_samples)))
    power = np.abs(np.fft.rfft(w.samples, nfft)) ** 2
    freqs = np.fft.rfftfreq(nfft, 1.0 / w.sample_rate)
    above = np.nonzero(power >= power.max() / 2.0)[0]
    return float(freqs[above[0]]), float(freqs[above[-1]])


def build_template_bank(specs, sample_rate: float = SAMPLE_RATE,
                        overlap_tol_hz: float = 200.0,
                        aux: dict[str, Waveform] | None = None) -> TemplateBank:
    """Build a bank from (mode, f_start, f_end, duration) tuples.

    Mode ids must be unique and in 1..4. Replicas sweeping in the same
    direction must have -3 dB bands that do not overlap by more than
    overlap_tol_hz; opposite sweeps are separated by the matched filter
    regardless of band overlap, so only identical specs are rejected there.
    """
    entries: dict[int, Waveform] = {}
    for mode, f0, f1, dur in specs:
        if mode in entries:
            raise ValueError(f"duplicate mode id {mode}")
        if not 1 <= mode <= 4:
            raise ValueError(f"mode id {mode} outside 1..4")
        entries[mode] = synth_lfm_chirp(f0, f1, dur, sample_rate)

    items = sorted(entries.items())
    for i, (ma, wa) in enumerate(items):
        for mb, wb in items[i + 1:]:
            if wa.band == wb.band:
                raise ValueError(f"modes {ma} and {mb} share band {wa.band}")
            if wa.sweep_sign != wb.sweep_sign:
                continue
            lo_a, hi_a = _measured_band(wa)
            lo_b, hi_b = _measured_band(wb)
            overlap = min(hi_a, hi_b) - max(lo_a, lo_b)
            if overlap > overlap_tol_hz:
                raise ValueError(
                    f"modes {ma} and {mb} overlap by {overlap:.0f} Hz at -3 dB")
    return TemplateBank(entries=entries, aux=aux or {})


def default_template_bank(sample_rate: float = SAMPLE_RATE) -> TemplateBank:
    """The standard four-chirp bank plus the two LBL reference chirps."""
    aux = {name: synth_lfm_chirp(f0, f1, dur, sample_rate)
           for name, (f0, f1, dur) in LBL_CHIRPS.items()}
    return build_template_bank(DEFAULT_MODE_CHIRPS, sample_rate, aux=aux)
