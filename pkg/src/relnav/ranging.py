"""Range measurement and mode identification from array recordings.

Each second the receiver captures 8000 samples on all five elements. The
per-element spectra are PHAT-whitened (phase-only), correlated against a
replica, gated by an inter-element consistency check, combined across the
ten element pairs, and normalized to a unit-energy pseudo-distribution over
range. Running every replica in the bank and tracking the winner across
seconds identifies the commanded mode.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .waveforms import TemplateBank, Waveform

CAPTURE_SAMPLES = 8000
N_ELEMENTS = 5
CONSISTENCY_SPAN = 15          # samples, inclusive (0.4 ms at 37.5 kS/s)
# Envelope-combined noise responses reach peak/median ratios near 6; the
# gate must sit above that tail while staying far below real detections.
DETECTION_PEAK_TO_MEDIAN = 6.5
CONFIRM_STREAK = 3


@dataclass
class ElementRecording:
    """One PPS-triggered capture: channels is (5, n_samples)."""

    channels: np.ndarray
    sample_rate: float
    trigger_epoch: float

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        if self.channels.ndim != 2 or self.channels.shape[0] != N_ELEMENTS:
            raise ValueError(f"expected {N_ELEMENTS} channels, got {self.channels.shape}")

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]


@dataclass
class RangeDistribution:
    """Unit-energy pseudo-distribution over uniformly spaced range bins."""

    weights: np.ndarray
    bin_width: float

    @property
    def n_bins(self) -> int:
        return len(self.weights)

    @property
    def max_range(self) -> float:
        return self.bin_width * self.n_bins

    def value_at(self, ranges):
        """Weight at the nearest bin, clamped to the valid bin span."""
        idx = np.clip(np.rint(np.asarray(ranges) / self.bin_width).astype(int),
                      0, self.n_bins - 1)
        return self.weights[idx]

    @property
    def peak_bin(self) -> int:
        return int(np.argmax(self.weights))

    @property
    def peak_range(self) -> float:
        return self.peak_bin * self.bin_width


@dataclass
class ModeDecision:
    """Winner history and the three-in-a-row confirmation state."""

    history: list = field(default_factory=list)
    confirmed: int | None = None
    last_scores: dict = field(default_factory=dict)

    def update(self, winner: int | None, scores: dict | None = None) -> "ModeDecision":
        self.history.append(winner)
        del self.history[:-8]
        self.last_scores = dict(scores or {})
        tail = self.history[-CONFIRM_STREAK:]
        if len(tail) == CONFIRM_STREAK and tail[0] is not None and len(set(tail)) == 1:
            self.confirmed = tail[0]
        else:
            self.confirmed = None
        return self


def phat_whiten(spectrum: np.ndarray) -> np.ndarray:
    """Phase transform: unit magnitude on nonzero bins, zero bins stay zero."""
    spectrum = np.asarray(spectrum, dtype=complex)
    mag = np.abs(spectrum)
    out = np.zeros_like(spectrum)
    nz = mag > 0.0
    out[nz] = spectrum[nz] / mag[nz]
    return out


def correlation_nfft(n_samples: int, template_len: int) -> int:
    """FFT length for linear (non-circular) correlation."""
    return 1 << int(np.ceil(np.log2(n_samples + template_len)))


def matched_filter(channel: np.ndarray, template: Waveform,
                   sample_rate: float | None = None) -> np.ndarray:
    """PHAT-whitened correlation of one channel against a replica.

    Returns the correlation at lags 0..n-1 (one per capture sample), computed
    in the frequency domain as the whitened channel spectrum times the
    conjugate template spectrum.
    """
    channel = np.asarray(channel, dtype=float)
    if sample_rate is not None and sample_rate != template.sample_rate:
        raise ValueError("channel and template sample rates differ")
    n = len(channel)
    nfft = correlation_nfft(n, template.n_samples)
    white = phat_whiten(np.fft.rfft(channel, nfft))
    spec = np.fft.rfft(template.samples, nfft)
    return np.fft.irfft(white * np.conj(spec), nfft)[:n]


def _analytic_correlations(white: np.ndarray, template_spec: np.ndarray,
                           nfft: int, n: int) -> np.ndarray:
    """Complex correlations from one-sided spectra, so |y| is the envelope.

    PHAT flattens the spectrum, which leaves an in-band carrier under the
    real correlation; taking the argmax of |real y| then quantizes to
    carrier peaks (up to 1.2 samples off at 8 kHz). Building y from the
    one-sided product keeps the analytic envelope instead, whose peak sits
    at the true arrival to within half a sample.
    """
    product = white * np.conj(template_spec)[None, :]
    full = np.zeros((product.shape[0], nfft), dtype=complex)
    full[:, :product.shape[1]] = product
    full[:, 0] *= 0.5
    if nfft % 2 == 0:
        full[:, product.shape[1] - 1] *= 0.5
    return np.fft.ifft(full, axis=1)[:, :n]


def consistency_check(argmaxima, max_spread: int = CONSISTENCY_SPAN) -> bool:
    """True when all per-element correlation peaks fall within max_spread samples."""
    argmaxima = np.asarray(argmaxima)
    return bool(argmaxima.max() - argmaxima.min() <= max_spread)


def combine_elements(per_element) -> np.ndarray:
    """Sum of |y_i||y_j| over the ten unordered element pairs.

    Uses the identity sum_{i<j} a_i a_j = ((sum a)^2 - sum a^2) / 2 on the
    per-element magnitudes.
    """
    mags = np.abs(np.asarray(per_element)).astype(float)
    if mags.ndim != 2:
        raise ValueError("expected a stack of correlation sequences")
    total = mags.sum(axis=0)
    return 0.5 * (total * total - (mags * mags).sum(axis=0))


def normalize_to_range(combined: np.ndarray, c: float, sample_rate: float) -> RangeDistribution:
    """Unit-energy range pseudo-distribution; bin n maps to range (c/F_s) n."""
    combined = np.asarray(combined, dtype=float)
    if np.any(combined < 0):
        raise ValueError("combined response must be non-negative")
    energy = np.sqrt(np.sum(combined * combined))
    if energy == 0.0:
        raise ValueError("all-zero combined response")
    return RangeDistribution(weights=combined / energy, bin_width=c / sample_rate)


@dataclass
class ReceptionResult:
    """Everything one capture yields: mode scores, validity, and the range surface."""

    decision: ModeDecision
    winner: int | None
    valid: bool                    # winner detected and element peaks consistent
    range_dist: RangeDistribution | None
    peak_bin: int | None
    peak_time: float | None        # epoch seconds of the matched-filter maximum
    argmaxima: np.ndarray | None
    spectra: np.ndarray            # (5, nfft//2+1) raw rfft at the correlation length
    nfft: int


def process_reception(recording: ElementRecording, bank: TemplateBank,
                      decision: ModeDecision, c: float,
                      threshold: float = DETECTION_PEAK_TO_MEDIAN) -> ReceptionResult:
    """Run the full per-second pipeline against every replica in the bank.

    The channel FFTs are computed once at the correlation length and reused
    both for all replicas (whitened) and by the beamformer (raw). The winning
    replica updates the mode decision; the range distribution is produced
    only when the winner passes the detection threshold and the per-element
    peaks pass the consistency check.
    """
    n = recording.n_samples
    longest = max(w.n_samples for w in bank.entries.values())
    nfft = correlation_nfft(n, longest)
    spectra = np.fft.rfft(recording.channels, nfft, axis=1)
    white = phat_whiten(spectra.ravel()).reshape(spectra.shape)

    peaks: dict[int, float] = {}
    per_mode: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for mode in bank.modes:
        spec = np.fft.rfft(bank[mode].samples, nfft)
        corr = _analytic_correlations(white, spec, nfft, n)
        combined = combine_elements(corr)
        argmaxima = np.argmax(np.abs(corr), axis=1)
        per_mode[mode] = (combined, argmaxima)
        peaks[mode] = float(combined.max())

    winner = max(peaks, key=peaks.get) if peaks else None
    detected = False
    if winner is not None:
        combined, argmaxima = per_mode[winner]
        floor = float(np.median(combined))
        detected = combined.max() > threshold * floor
    decision.update(winner if detected else None, peaks)

    if not detected:
        return ReceptionResult(decision, None, False, None, None, None, None, spectra, nfft)

    valid = consistency_check(argmaxima)
    if not valid:
        return ReceptionResult(decision, winner, False, None, None, None, argmaxima, spectra, nfft)

    dist = normalize_to_range(combined, c, recording.sample_rate)
    peak_bin = dist.peak_bin
    peak_time = recording.trigger_epoch + peak_bin / recording.sample_rate
    return ReceptionResult(decision, winner, True, dist, peak_bin, peak_time,
                           argmaxima, spectra, nfft)


def identify_mode(recording: ElementRecording, bank: TemplateBank,
                  decision: ModeDecision, c: float = 1481.0,
                  threshold: float = DETECTION_PEAK_TO_MEDIAN) -> ModeDecision:
    """Update the mode decision from one recording (ranging byproducts discarded)."""
    return process_reception(recording, bank, decision, c, threshold).decision


class RangeDumpWriter:
    """Binary debug dump: header {F_s, c, n_bins} then float32 rows."""

    HEADER = struct.Struct("<ddi")

    def __init__(self, path, sample_rate: float, c: float, n_bins: int):
        self._fh = open(path, "wb")
        self._fh.write(self.HEADER.pack(sample_rate, c, n_bins))
        self._n_bins = n_bins

    def write_row(self, row: np.ndarray):
        row = np.asarray(row, dtype=np.float32)
        if len(row) != self._n_bins:
            raise ValueError(f"expected {self._n_bins} values, got {len(row)}")
        self._fh.write(row.tobytes())

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_range_dump(path):
    """Read a debug dump back as (sample_rate, c, rows array)."""
    with open(path, "rb") as fh:
        sample_rate, c, n_bins = RangeDumpWriter.HEADER.unpack(
            fh.read(RangeDumpWriter.HEADER.size))
        data = np.frombuffer(fh.read(), dtype=np.float32)
    return sample_rate, c, data.reshape(-1, n_bins)
