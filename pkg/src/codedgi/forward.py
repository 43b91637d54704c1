"""Forward model: illumination ensembles and noisy bucket-detector synthesis.

A measurement n integrates the scene reflectance over the lit pixel set,
scales it by a per-shot fading magnitude and the symbol amplitude sqrt(Es),
and adds real Gaussian noise of variance N0/2:

    R_n = |h_n| * sqrt(Es) * sum_{i in pattern_n} delta_i + w_n

Fading magnitudes are Rayleigh with unit second moment (the magnitude of a
circularly-symmetric unit-variance complex Gaussian); with fading off they
are all ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codes import GeneratorMatrix

FADING_MODES = ("none", "rayleigh")


@dataclass
class SceneImage:
    """Row-major reflectance map, values in [0, 1]."""

    width: int
    height: int
    reflectance: np.ndarray

    def __post_init__(self):
        self.reflectance = np.asarray(self.reflectance, dtype=np.float64)
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if self.reflectance.shape != (self.width * self.height,):
            raise ValueError(
                f"reflectance length {self.reflectance.shape} != width*height"
            )
        if self.reflectance.min() < 0 or self.reflectance.max() > 1:
            raise ValueError("reflectance values must lie in [0, 1]")

    @property
    def k_pixels(self) -> int:
        return self.width * self.height

    def is_binary(self) -> bool:
        return bool(np.isin(self.reflectance, (0.0, 1.0)).all())

    def require_binary(self) -> None:
        if not self.is_binary():
            raise ValueError("binary analysis path requires a {0,1} scene")


@dataclass
class IlluminationEnsemble:
    """N pixel-subset patterns; sparse index arrays over {0..K-1}."""

    k_pixels: int
    patterns: list[np.ndarray]
    source: str  # "coded" or "speckle"

    @property
    def n_patterns(self) -> int:
        return len(self.patterns)

    def pattern_sizes(self) -> np.ndarray:
        return np.array([len(p) for p in self.patterns], dtype=np.int64)

    def duty_ratio(self) -> float:
        """Lit fraction averaged over the whole ensemble."""
        if not self.patterns:
            raise ValueError("empty ensemble")
        return float(self.pattern_sizes().sum()) / (self.n_patterns * self.k_pixels)

    def dense(self) -> np.ndarray:
        """(N, K) 0/1 matrix; intended for the correlation baselines."""
        a = np.zeros((self.n_patterns, self.k_pixels), dtype=np.float64)
        for n, pat in enumerate(self.patterns):
            a[n, pat] = 1.0
        return a


@dataclass(frozen=True)
class ChannelParams:
    """Symbol energy, noise density, and fading mode of the acquisition."""

    es: float = 1.0
    n0: float = 1.0
    fading: str = "none"
    csi_known: bool = True

    def __post_init__(self):
        if self.es <= 0:
            raise ValueError("Es must be positive")
        if self.n0 < 0:
            raise ValueError("N0 must be non-negative")
        if self.fading not in FADING_MODES:
            raise ValueError(f"fading must be one of {FADING_MODES}")

    @property
    def gamma(self) -> float:
        """Linear SNR Es/N0 (requires N0 > 0)."""
        if self.n0 <= 0:
            raise ValueError("gamma undefined for N0 = 0")
        return self.es / self.n0


@dataclass
class Measurement:
    """Bucket signal plus the per-shot fading magnitudes that produced it."""

    bucket: np.ndarray
    fading_mag: np.ndarray
    channel: ChannelParams
    seed: int

    def __post_init__(self):
        self.bucket = np.asarray(self.bucket, dtype=np.float64)
        self.fading_mag = np.asarray(self.fading_mag, dtype=np.float64)
        if self.bucket.shape != self.fading_mag.shape:
            raise ValueError("bucket and fading_mag lengths differ")
        if (self.fading_mag < 0).any():
            raise ValueError("fading magnitudes must be non-negative")

    @property
    def n_shots(self) -> int:
        return len(self.bucket)


def patterns_from_generator(g: GeneratorMatrix) -> IlluminationEnsemble:
    """Column supports of G as illumination patterns.

    The K identity columns give singleton patterns {0}..{K-1}; pattern K+j is
    parity column j's support.
    """
    patterns = [np.array([i], dtype=np.int64) for i in range(g.k_info)]
    patterns.extend(g.parity_columns)
    return IlluminationEnsemble(k_pixels=g.k_info, patterns=patterns, source="coded")


def random_speckle(
    k: int, n: int, duty: float, seed: int
) -> IlluminationEnsemble:
    """Bernoulli(duty) speckle: each pixel lit independently per pattern."""
    if not 0 < duty <= 1:
        raise ValueError("duty must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    patterns = []
    for _ in range(n):
        mask = rng.random(k) < duty
        patterns.append(np.flatnonzero(mask).astype(np.int64))
    return IlluminationEnsemble(k_pixels=k, patterns=patterns, source="speckle")


def pattern_sums(ens: IlluminationEnsemble, scene: SceneImage) -> np.ndarray:
    """Noise-free aggregated return per pattern: s_n = sum of lit reflectances."""
    if scene.k_pixels != ens.k_pixels:
        raise ValueError(
            f"scene has {scene.k_pixels} pixels, ensemble expects {ens.k_pixels}"
        )
    refl = scene.reflectance
    return np.array([refl[pat].sum() for pat in ens.patterns], dtype=np.float64)


def sense(
    ens: IlluminationEnsemble,
    scene: SceneImage,
    ch: ChannelParams,
    seed: int,
) -> Measurement:
    """Synthesize one bucket-signal acquisition through the fading channel.

    Draw order is fixed (fading first, then noise) so a seed reproduces the
    measurement exactly.
    """
    sums = pattern_sums(ens, scene)
    n = len(sums)
    rng = np.random.default_rng(seed)
    if ch.fading == "rayleigh":
        # scale 1/sqrt(2) gives E[|h|^2] = 1
        h = rng.rayleigh(scale=math.sqrt(0.5), size=n)
    else:
        h = np.ones(n)
    bucket = h * math.sqrt(ch.es) * sums
    if ch.n0 > 0:
        bucket = bucket + rng.normal(0.0, math.sqrt(ch.n0 / 2.0), size=n)
    return Measurement(bucket=bucket, fading_mag=h, channel=ch, seed=seed)


RAYLEIGH_MEAN_MAG = math.sqrt(math.pi) / 2.0  # mean |h| at unit second moment


def effective_amplitudes(m: Measurement) -> np.ndarray:
    """Fading magnitudes as a receiver sees them.

    With CSI the true per-shot magnitudes are available; without it every
    shot is assigned the ensemble-mean magnitude, which deliberately
    mismatches the reconstruction against the realized fading.
    """
    if m.channel.csi_known:
        return m.fading_mag
    mean = RAYLEIGH_MEAN_MAG if m.channel.fading == "rayleigh" else 1.0
    return np.full_like(m.fading_mag, mean)


def snr_db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def snr_linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("linear SNR must be positive")
    return 10.0 * math.log10(x)


def save_measurement_csv(m: Measurement, path) -> None:
    """CSV with channel parameters in '#' comment lines, then index,bucket,fading_mag."""
    ch = m.channel
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# es = {ch.es!r}\n")
        fh.write(f"# n0 = {ch.n0!r}\n")
        fh.write(f"# fading = {ch.fading}\n")
        fh.write(f"# csi_known = {int(ch.csi_known)}\n")
        fh.write(f"# seed = {m.seed}\n")
        fh.write("index,bucket,fading_mag\n")
        for i, (r, h) in enumerate(zip(m.bucket, m.fading_mag)):
            fh.write(f"{i},{float(r)!r},{float(h)!r}\n")


def load_measurement_csv(path) -> Measurement:
    meta: dict[str, str] = {}
    bucket = []
    fading = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif line.startswith("index,"):
                continue
            else:
                _, r, h = line.split(",")
                bucket.append(float(r))
                fading.append(float(h))
    ch = ChannelParams(
        es=float(meta["es"]),
        n0=float(meta["n0"]),
        fading=meta["fading"],
        csi_known=bool(int(meta["csi_known"])),
    )
    return Measurement(
        bucket=np.array(bucket),
        fading_mag=np.array(fading),
        channel=ch,
        seed=int(meta["seed"]),
    )
