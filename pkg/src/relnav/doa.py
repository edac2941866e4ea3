"""Direction-of-arrival estimation for the five-element pyramid array.

Two beamformers are provided. Conventional beamforming (CBF) steers over a
2D (inclination, azimuth) grid and serves as the reference; its steering
table grows with directions x elements x frequencies, which is what makes
fine grids prohibitive on embedded hardware. Sensor-pair-decomposition
beamforming (SPD) instead runs a 1D conventional beamformer over conical
angle for each of the ten element pairs and maps pair responses onto
arbitrary look directions by nearest conical angle, so its precomputed
state grows only with pairs x conical angles x frequencies. Because the
mapping is a cheap lookup, SPD power can be evaluated at any set of
directions (in particular, straight at particle hypotheses).

A periodic azimuth bias table compensates body-interaction biases; it is
measured by a rotational calibration and applied both to raw azimuth
estimates and (inverted) to look directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import spherical_to_cartesian_arrays

DEFAULT_CONICAL_RESOLUTION_DEG = 0.25
DOA_NFFT = 16384   # zero-padded FFT length: 2.29 Hz bins at 37.5 kS/s


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions in the BFF, meters. The production array has 5."""

    positions: np.ndarray
    description: str = ""

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        if pos.shape[1] != 3:
            raise ValueError("positions must be (N, 3)")
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.linalg.norm(pos[i] - pos[j]) == 0.0:
                    raise ValueError(f"elements {i} and {j} coincide")

    @property
    def n_elements(self) -> int:
        return len(self.positions)

    def pairs(self):
        n = self.n_elements
        return [(i, j) for i in range(n) for j in range(i + 1, n)]


def usbl_pyramid(edge: float = 0.08) -> ArrayGeometry:
    """Square-base pyramid with the given edge length, apex up."""
    half = edge / 2.0
    apex = edge / np.sqrt(2.0)
    pos = np.array([
        [half, half, 0.0],
        [half, -half, 0.0],
        [-half, -half, 0.0],
        [-half, half, 0.0],
        [0.0, 0.0, apex],
    ])
    return ArrayGeometry(pos - pos.mean(axis=0), description=f"pyramid_{edge:g}m")


@dataclass(frozen=True)
class FrequencyBand:
    """Angular-frequency bins used for wideband beamforming."""

    frequencies_hz: np.ndarray
    resolution_hz: float
    bin_indices: np.ndarray | None = None   # rfft bin index per frequency, if FFT-derived

    def __post_init__(self):
        f = np.asarray(self.frequencies_hz, dtype=float)
        object.__setattr__(self, "frequencies_hz", f)
        if len(f) < 1:
            raise ValueError("band must contain at least one frequency")

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequencies_hz

    @property
    def n_bins(self) -> int:
        return len(self.frequencies_hz)

    @classmethod
    def from_band(cls, f_lo: float, f_hi: float, sample_rate: float,
                  nfft: int = DOA_NFFT, step: int = 1) -> "FrequencyBand":
        """All rfft bins of an nfft-point transform inside [f_lo, f_hi]."""
        df = sample_rate / nfft
        k0 = int(np.ceil(f_lo / df))
        k1 = int(np.floor(f_hi / df))
        if k1 < k0:
            raise ValueError("band contains no FFT bins")
        idx = np.arange(k0, k1 + 1, step)
        return cls(frequencies_hz=idx * df, resolution_hz=df * step, bin_indices=idx)


@dataclass(frozen=True)
class ConicalGrid:
    """Uniform conical-angle grid covering [0, 180] degrees."""

    resolution_deg: float = DEFAULT_CONICAL_RESOLUTION_DEG

    @property
    def angles_deg(self) -> np.ndarray:
        return np.arange(0.0, 180.0 + 0.5 * self.resolution_deg, self.resolution_deg)

    @property
    def n_angles(self) -> int:
        return len(self.angles_deg)

    def nearest_index(self, angles_deg):
        """Nearest grid index; exact midpoints resolve toward the smaller angle."""
        x = np.asarray(angles_deg) / self.resolution_deg
        return np.clip(np.ceil(x - 0.5).astype(int), 0, self.n_angles - 1)


@dataclass
class AngleResponse:
    """Beamformer powers aligned with a list of (theta, phi) directions."""

    directions: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        self.directions = np.atleast_2d(np.asarray(self.directions, dtype=float))
        self.powers = np.asarray(self.powers, dtype=float)
        if len(self.directions) != len(self.powers):
            raise ValueError("directions and powers length mismatch")

    @property
    def argmax_direction(self) -> tuple[float, float]:
        i = int(np.argmax(self.powers))
        return float(self.directions[i, 0]), float(self.directions[i, 1])


def source_unit_vectors(directions) -> np.ndarray:
    """Unit vectors pointing from the array toward (theta, phi) sources."""
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    x, y, z = spherical_to_cartesian_arrays(1.0, d[:, 0], d[:, 1])
    return np.column_stack([x, y, z])


def plane_wave_delays(geometry: ArrayGeometry, theta_deg: float, phi_deg: float,
                      c: float) -> np.ndarray:
    """Per-element arrival delays of a plane wave from (theta, phi), seconds.

    The propagation direction is the negated source direction, so elements
    nearer the source have negative delay.
    """
    if c <= 0:
        raise ValueError("soundspeed must be positive")
    a = -source_unit_vectors([(theta_deg, phi_deg)])[0]
    return geometry.positions @ a / c


def cbf_power(spectra: np.ndarray, geometry: ArrayGeometry, directions,
              band: FrequencyBand, c: float, chunk: int = 4096) -> AngleResponse:
    """Wideband conventional beamformer power over a list of directions.

    Power at each direction is the mean over the band of |sum_i H_i X_i|^2
    with H_i = exp(j w tau_i). spectra is (N, M) aligned with band bins.
    """
    spectra = np.asarray(spectra, dtype=complex)
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if band.n_bins == 0:
        raise ValueError("empty frequency band")
    srcs = source_unit_vectors(dirs)                       # (K, 3)
    omega = band.omega                                     # (M,)
    powers = np.empty(len(dirs))
    for start in range(0, len(dirs), chunk):
        a = -srcs[start:start + chunk]                     # propagation dirs
        tau = a @ geometry.positions.T / c                 # (k, N)
        steer = np.exp(1j * tau[:, :, None] * omega[None, None, :])
        summed = np.einsum("knm,nm->km", steer, spectra)
        powers[start:start + chunk] = np.mean(np.abs(summed) ** 2, axis=1)
    return AngleResponse(directions=dirs, powers=powers)


def grid_directions(inclination_step_deg: float, azimuth_step_deg: float) -> np.ndarray:
    """Full (theta, phi) grid covering the sphere at the given steps."""
    thetas = np.arange(0.0, 180.0 + 0.5 * inclination_step_deg, inclination_step_deg)
    phis = np.arange(0.0, 360.0, azimuth_step_deg)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    return np.column_stack([tt.ravel(), pp.ravel()])


def cbf_table_entries(n_directions: int, n_elements: int, n_freqs: int) -> int:
    """Precomputed steering entries a full CBF table would need."""
    return n_directions * n_elements * n_freqs


def spd_table_entries(n_pairs: int, n_conical: int, n_freqs: int) -> int:
    """Precomputed steering entries the SPD decomposition needs."""
    return n_pairs * n_conical * n_freqs


class SpdBeamformer:
    """Pair-decomposed beamformer with steering tables precomputed once.

    Each pair (i, j) is a two-element line array along its own axis; its 1D
    conventional beamformer over conical angle zeta reduces to

        P_ij[zeta] = mean_k(|X_i|^2 + |X_j|^2) + (2/M) Re sum_k E[zeta, k] X_i conj(X_j)

    with E[zeta, k] = exp(j w_k d cos(zeta) / c) and d the pair separation.
    E depends only on d, so pairs with equal separation share one table.
    Mapping a look direction onto a pair picks the grid angle nearest
    arccos(s . u) where s is the source unit vector and u the pair axis, and
    the ten pair responses are summed in fixed pair order.
    """

    def __init__(self, geometry: ArrayGeometry, band: FrequencyBand,
                 conical: ConicalGrid | None = None, c: float = 1481.0):
        self.geometry = geometry
        self.band = band
        self.conical = conical or ConicalGrid()
        if self.conical.n_angles == 0:
            raise ValueError("empty conical grid")
        self.c = c
        self.pairs = geometry.pairs()
        deltas = [geometry.positions[j] - geometry.positions[i] for i, j in self.pairs]
        self.pair_axes = np.array([d / np.linalg.norm(d) for d in deltas])
        self.pair_dists = np.array([np.linalg.norm(d) for d in deltas])

        cos_z = np.cos(np.radians(self.conical.angles_deg))
        self._tables: dict[float, np.ndarray] = {}
        self._table_of_pair = []
        for d in self.pair_dists:
            key = round(float(d), 9)
            if key not in self._tables:
                delay = d * cos_z / c                                   # (Z,)
                self._tables[key] = np.exp(
                    1j * np.outer(delay, self.band.omega)).astype(np.complex64)
            self._table_of_pair.append(key)

    @property
    def table_entries(self) -> int:
        return spd_table_entries(len(self.pairs), self.conical.n_angles, self.band.n_bins)

    def pair_responses(self, spectra: np.ndarray) -> np.ndarray:
        """Conical-angle power for every pair: (n_pairs, n_conical)."""
        spectra = np.asarray(spectra, dtype=complex)
        m = self.band.n_bins
        power = np.abs(spectra) ** 2
        out = np.empty((len(self.pairs), self.conical.n_angles))
        for p, (i, j) in enumerate(self.pairs):
            cross = (spectra[i] * np.conj(spectra[j])).astype(np.complex64)
            base = float(np.sum(power[i] + power[j])) / m
            out[p] = base + (2.0 / m) * np.real(self._tables[self._table_of_pair[p]] @ cross)
        # |A + B|^2 is non-negative; single-precision rounding may dip under.
        return np.maximum(out, 0.0)

    def power_at(self, directions, pair_resps: np.ndarray | None = None,
                 spectra: np.ndarray | None = None) -> np.ndarray:
        """Summed pair power at each (theta, phi) look direction."""
        if pair_resps is None:
            pair_resps = self.pair_responses(spectra)
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        srcs = source_unit_vectors(dirs)                    # (K, 3)
        cos_z = np.clip(srcs @ self.pair_axes.T, -1.0, 1.0)  # (K, P)
        zeta = np.degrees(np.arccos(cos_z))
        powers = np.zeros(len(dirs))
        for p in range(len(self.pairs)):
            idx = self.conical.nearest_index(zeta[:, p])
            powers += pair_resps[p, idx]
        return powers


def spd_beamform(spectra: np.ndarray, geometry: ArrayGeometry, eval_directions,
                 band: FrequencyBand, conical: ConicalGrid | None = None,
                 c: float = 1481.0) -> AngleResponse:
    """SPD beamformer power at an arbitrary list of (theta, phi) directions."""
    dirs = np.atleast_2d(np.asarray(eval_directions, dtype=float))
    if dirs.size == 0:
        raise ValueError("eval_directions must be non-empty")
    bf = SpdBeamformer(geometry, band, conical, c)
    return AngleResponse(directions=dirs, powers=bf.power_at(dirs, spectra=spectra))


def evaluate_at_particles(spectra: np.ndarray, geometry: ArrayGeometry,
                          particle_directions, band: FrequencyBand,
                          conical: ConicalGrid | None = None,
                          c: float = 1481.0) -> np.ndarray:
    """SPD powers aligned with particle directions (pair responses computed once)."""
    return spd_beamform(spectra, geometry, particle_directions, band, conical, c).powers


class AzimuthBiasTable:
    """Periodic lookup of azimuth bias (degrees) against apparent azimuth.

    bias(phi) interpolates linearly between table rows and wraps over 360.
    correct() maps an apparent (raw) azimuth back to true; apparent() is the
    numerically inverted map used to warp look directions the other way.
    """

    def __init__(self, azimuths_deg, biases_deg):
        az = np.asarray(azimuths_deg, dtype=float) % 360.0
        order = np.argsort(az)
        self.azimuths_deg = az[order]
        self.biases_deg = np.asarray(biases_deg, dtype=float)[order]
        if len(self.azimuths_deg) == 0:
            raise ValueError("empty bias table")
        self._grid_az = np.concatenate([self.azimuths_deg, [self.azimuths_deg[0] + 360.0]])
        self._grid_bias = np.concatenate([self.biases_deg, [self.biases_deg[0]]])
        apparent = np.arange(0.0, 360.0, 0.25)
        corrected = apparent - self.bias_at(apparent)
        # Unwrapped corrected grid is monotone for small biases; invert by interpolation.
        self._inv_corrected = corrected
        self._inv_apparent = apparent

    @classmethod
    def zero(cls) -> "AzimuthBiasTable":
        return cls([0.0], [0.0])

    def bias_at(self, phi_deg):
        phi = np.asarray(phi_deg, dtype=float) % 360.0
        shifted = np.where(phi < self._grid_az[0], phi + 360.0, phi)
        return np.interp(shifted, self._grid_az, self._grid_bias)

    def correct(self, raw_phi_deg):
        return (np.asarray(raw_phi_deg, dtype=float) - self.bias_at(raw_phi_deg)) % 360.0

    def apparent(self, true_phi_deg):
        """Apparent azimuth that corrects back to the given true azimuth."""
        true_phi = np.asarray(true_phi_deg, dtype=float) % 360.0
        diffs = true_phi[..., None] - self._inv_corrected[None, ...]
        wrapped = np.abs((diffs + 180.0) % 360.0 - 180.0)
        return self._inv_apparent[np.argmin(wrapped, axis=-1)]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("azimuth_deg,bias_deg\n")
            for a, b in zip(self.azimuths_deg, self.biases_deg):
                fh.write(f"{a:.3f},{b:.5f}\n")

    @classmethod
    def from_csv(cls, path) -> "AzimuthBiasTable":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(rows[:, 0], rows[:, 1])


def correct_azimuth(raw_phi_deg: float, table: AzimuthBiasTable) -> float:
    """Bias-corrected azimuth, wrapped to [0, 360)."""
    return float(table.correct(raw_phi_deg))
