"""Experiment orchestration: configs, seed derivation, sweeps, manifests.

Every run directory receives a manifest whose [config] section replays the
run bit-identically (CSV and PGM bytes) via `replay`. Randomness flows only
through per-trial seeds derived with a stateless splitmix64 mix of the
master seed, the sweep-point index, and the trial index.
"""

from __future__ import annotations

import concurrent.futures
import datetime
import math
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__
from .baselines import binarize, cgi_reconstruct, dgi_reconstruct, pinv_reconstruct
from .bound import BoundParams, ber_lower_bound
from .codes import (
    CodeSpec,
    DegreeDistribution,
    build_generator,
    derive_parity_check,
    encode,
)
from .decoder import BpOptions, decode_gf2_bp, decode_sum_bp, symbol_llr
from .forward import (
    RAYLEIGH_MEAN_MAG,
    ChannelParams,
    IlluminationEnsemble,
    Measurement,
    SceneImage,
    patterns_from_generator,
    random_speckle,
    sense,
)
from .metrics import FrameStack, GrayImage, ber, grayscale_stack, mean_abs_error, normalize, psnr
from .pgmio import read_pgm, write_pgm
from .scenes import SCENE_NAMES, builtin_scene

RNG_ID = "numpy-PCG64; trial seeds via splitmix64(master, point, trial)"

EXPERIMENTS = ("sweep-ber", "sweep-sampling", "compare", "grayscale")


class ConfigError(Exception):
    """Invalid run configuration; maps to process exit code 2."""


# ---------------------------------------------------------------------------
# seed derivation
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_trial_seed(master: int, trial_index: int, point_index: int) -> int:
    """Stateless mix; distinct (trial, point) roles use distinct constants."""
    z = _splitmix64(master & _MASK64)
    z = _splitmix64(z ^ ((0xA0761D6478BD642F + trial_index) & _MASK64))
    z = _splitmix64(z ^ ((0xE7037ED1A0B428DB + point_index) & _MASK64))
    return z


def _substream(seed: int, label: int) -> int:
    """Independent child seed for one role (code, channel, speckle, ...)."""
    return _splitmix64(seed ^ ((0x9E3779B97F4A7C15 * (label + 1)) & _MASK64))


_SUB_CODE, _SUB_SENSE, _SUB_SPECKLE, _SUB_BASELINE = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    experiment: str = "sweep-ber"
    scene: str = "glyphs"
    width: int = 16
    height: int = 16
    sampling: int = 2
    multipliers: tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    degree: int = 8
    dist: str = ""  # "d:w,d:w" mixture; overrides degree when set
    snr_db_list: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0)
    snr_db: float = 10.0
    fading: str = "rayleigh"
    # experiments default to a receiver without per-shot channel knowledge,
    # matching a bucket detector that cannot observe the fading realization
    csi_known: bool = False
    es: float = 1.0
    trials: int = 10
    seed: int = 20250810
    decoder_mode: str = "sum-constraint"
    max_iters: int = 50
    stall_window: int = 3
    damping: float = 0.0
    prior: float = 0.5
    gray_bits: int = 5
    speckle_duty: float = 0.15
    baseline_on_coded: bool = False
    out: str = "runs/run"
    threads: int = 1

    @property
    def k_pixels(self) -> int:
        return self.width * self.height

    def degree_distribution(self) -> DegreeDistribution:
        if self.dist:
            return parse_distribution(self.dist)
        return DegreeDistribution.regular(self.degree)

    def bp_options(self) -> BpOptions:
        return BpOptions(
            max_iters=self.max_iters,
            stall_window=self.stall_window,
            pixel_prior_one=self.prior,
            damping=self.damping,
            mode=self.decoder_mode,
        )

    def validate(self) -> None:
        try:
            if self.experiment not in EXPERIMENTS:
                raise ValueError(f"unknown experiment {self.experiment!r}")
            if self.width < 1 or self.height < 1:
                raise ValueError("plane dimensions must be positive")
            if self.sampling < 1:
                raise ValueError("sampling multiplier must be >= 1")
            if self.trials < 1:
                raise ValueError("trials must be >= 1")
            if self.threads < 1:
                raise ValueError("threads must be >= 1")
            if not 0 < self.speckle_duty <= 1:
                raise ValueError("speckle_duty must lie in (0, 1]")
            if self.gray_bits < 1:
                raise ValueError("gray_bits must be >= 1")
            self.degree_distribution().validate_for_k(self.k_pixels)
            self.bp_options()
            ChannelParams(es=self.es, n0=1.0, fading=self.fading, csi_known=self.csi_known)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(f"{v:g}" for v in value)
            elif isinstance(value, bool):
                value = int(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


PRESETS = {
    # the reference configuration: 32x32 plane, 2x sampling, degree 128
    "paper-v": {
        "width": 32,
        "height": 32,
        "sampling": 2,
        "degree": 128,
        "trials": 10,
        "fading": "rayleigh",
        "snr_db_list": (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0),
    },
}


def parse_distribution(text: str) -> DegreeDistribution:
    """Parse 'd:w,d:w' mixtures, e.g. '2:0.5,4:0.5'."""
    terms = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            d, w = part.split(":")
            terms.append((int(d), float(w)))
        else:
            terms.append((int(part), 1.0))
    try:
        return DegreeDistribution(tuple(terms))
    except ValueError as exc:
        raise ConfigError(f"bad degree distribution {text!r}: {exc}") from exc


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Flat 'key = value' lines; '#' starts a comment; unknown keys rejected."""
    cfg = base or RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        updates[key] = _coerce(key, value, getattr(cfg, key))
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


def _coerce(key: str, value: str, default):
    try:
        if isinstance(default, bool):
            return value.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            items = [v.strip() for v in value.split(",") if v.strip()]
            if all(isinstance(d, int) for d in default) and default:
                return tuple(int(float(v)) for v in items)
            return tuple(float(v) for v in items)
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base=base)


def load_scene(cfg: RunConfig) -> SceneImage:
    if cfg.scene in SCENE_NAMES:
        return builtin_scene(cfg.scene, cfg.width, cfg.height)
    if cfg.scene.endswith(".pgm"):
        width, height, values = read_pgm(cfg.scene)
        if (width, height) != (cfg.width, cfg.height):
            raise ConfigError(
                f"scene file is {width}x{height}, config says {cfg.width}x{cfg.height}"
            )
        return SceneImage(width=width, height=height, reflectance=values)
    raise ConfigError(f"scene {cfg.scene!r} is neither builtin {SCENE_NAMES} nor a .pgm path")


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


def write_manifest(run_dir: str, cfg: RunConfig, seeds: dict[str, int]) -> str:
    path = os.path.join(run_dir, "manifest.txt")
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# codedgi run manifest\n")
        fh.write(f"tool = codedgi {__version__}\n")
        fh.write(f"rng = {RNG_ID}\n")
        fh.write(f"created_utc = {stamp}\n")
        fh.write("[config]\n")
        fh.write(cfg.to_text())
        fh.write("[seeds]\n")
        for label in sorted(seeds):
            fh.write(f"{label} = {seeds[label]}\n")
    return path


def read_manifest_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    try:
        start = lines.index("[config]") + 1
    except ValueError:
        raise ConfigError(f"{path} has no [config] section") from None
    end = lines.index("[seeds]") if "[seeds]" in lines else len(lines)
    return parse_config_text("\n".join(lines[start:end]))


def replay(manifest_path, out_dir: str) -> str:
    """Re-run the experiment recorded in a manifest into a fresh directory."""
    cfg = read_manifest_config(manifest_path)
    cfg = replace(cfg, out=out_dir)
    return run_experiment(cfg)


# ---------------------------------------------------------------------------
# trial pipelines
# ---------------------------------------------------------------------------


def _channel(cfg: RunConfig, snr_db: float) -> ChannelParams:
    n0 = cfg.es / (10.0 ** (snr_db / 10.0))
    return ChannelParams(es=cfg.es, n0=n0, fading=cfg.fading, csi_known=cfg.csi_known)


def _transmit_bits(bits: np.ndarray, ch: ChannelParams, seed: int):
    """Per-symbol on-off transmission of a codeword (binary-symbol view)."""
    rng = np.random.default_rng(seed)
    n = len(bits)
    if ch.fading == "rayleigh":
        h = rng.rayleigh(scale=math.sqrt(0.5), size=n)
    else:
        h = np.ones(n)
    r = h * math.sqrt(ch.es) * bits.astype(np.float64)
    if ch.n0 > 0:
        r = r + rng.normal(0.0, math.sqrt(ch.n0 / 2.0), size=n)
    return r, h


def _coded_decode_trial(
    cfg: RunConfig, scene: SceneImage, n_total: int, ch: ChannelParams, seed: int
):
    """One fresh-code acquisition and decode; returns (bits, diagnostics)."""
    spec = CodeSpec(
        k_info=cfg.k_pixels,
        n_total=n_total,
        dist=cfg.degree_distribution(),
        seed=_substream(seed, _SUB_CODE),
    )
    g = build_generator(spec)
    opts = cfg.bp_options()
    if cfg.decoder_mode == "gf2":
        truth_bits = np.rint(scene.reflectance).astype(np.uint8)
        codeword = encode(g, truth_bits)
        r, h = _transmit_bits(codeword, ch, _substream(seed, _SUB_SENSE))
        mean = RAYLEIGH_MEAN_MAG if ch.fading == "rayleigh" else 1.0
        amp = h if ch.csi_known else np.full_like(h, mean)
        llrs = symbol_llr(r, amp, ch)
        result = decode_gf2_bp(llrs, derive_parity_check(g), opts)
    else:
        ens = patterns_from_generator(g)
        meas = sense(ens, scene, ch, _substream(seed, _SUB_SENSE))
        result = decode_sum_bp(meas, ens, opts)
    return result.pixels, result.diagnostics


def _ber_point_trial(args):
    cfg, scene, snr_db, point, trial = args
    seed = derive_trial_seed(cfg.seed, trial, point)
    ch = _channel(cfg, snr_db)
    truth = np.rint(scene.reflectance).astype(np.uint8)
    pixels, diag = _coded_decode_trial(cfg, scene, cfg.sampling * cfg.k_pixels, ch, seed)
    return point, trial, ber(truth, pixels), diag


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _prepare_run_dir(cfg: RunConfig) -> str:
    run_dir = os.path.join(cfg.out, cfg.experiment)
    os.makedirs(run_dir, exist_ok=True)
    return run_dir


def _map_jobs(jobs, worker, threads: int):
    """Run jobs (list of arg tuples) preserving deterministic output order."""
    if threads <= 1:
        return [worker(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, jobs, chunksize=1))


def _stderr(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(len(values)))


def run_ber_sweep(cfg: RunConfig) -> str:
    """BER vs SNR with the analytic lower bound alongside."""
    cfg.validate()
    scene = load_scene(cfg)
    scene.require_binary()
    run_dir = _prepare_run_dir(cfg)
    n_total = cfg.sampling * cfg.k_pixels
    dist = cfg.degree_distribution()

    jobs = [
        (cfg, scene, snr_db, p, t)
        for p, snr_db in enumerate(cfg.snr_db_list)
        for t in range(cfg.trials)
    ]
    results = _map_jobs(jobs, _ber_point_trial, cfg.threads)
    by_point: dict[int, dict[int, tuple]] = {}
    for point, trial, trial_ber, diag in results:
        by_point.setdefault(point, {})[trial] = (trial_ber, diag)

    seeds = {
        f"point{p}_trial{t}": derive_trial_seed(cfg.seed, t, p)
        for p in range(len(cfg.snr_db_list))
        for t in range(cfg.trials)
    }
    write_manifest(run_dir, cfg, seeds)

    csv_path = os.path.join(run_dir, "ber_sweep.csv")
    diag_path = os.path.join(run_dir, "decode_diagnostics.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh, open(
        diag_path, "w", encoding="utf-8", newline=""
    ) as dfh:
        fh.write("# schema: codedgi.ber-sweep.v1\n")
        fh.write("snr_db,ber_mean,ber_stderr,bound,trials\n")
        dfh.write("# schema: codedgi.decode-diag.v1\n")
        dfh.write("point,trial,iterations_run,converged,residual,unpinned_pixel_count\n")
        for p, snr_db in enumerate(cfg.snr_db_list):
            gamma = 10.0 ** (snr_db / 10.0)
            bound = ber_lower_bound(
                BoundParams(
                    k_info=cfg.k_pixels,
                    n_total=n_total,
                    dist=dist,
                    es=cfg.es,
                    n0=cfg.es / gamma,
                )
            )
            bers = np.array([by_point[p][t][0] for t in range(cfg.trials)])
            fh.write(
                f"{snr_db:g},{float(bers.mean())!r},{_stderr(bers)!r},{bound!r},{cfg.trials}\n"
            )
            for t in range(cfg.trials):
                dfh.write(f"{p},{t},{by_point[p][t][1].csv_row()}\n")
    return run_dir


def _sampling_trial(args):
    cfg, scene, point, trial, multiplier = args
    seed = derive_trial_seed(cfg.seed, trial, point)
    ch = _channel(cfg, cfg.snr_db)
    truth = np.rint(scene.reflectance).astype(np.uint8)
    pixels, _ = _coded_decode_trial(cfg, scene, multiplier * cfg.k_pixels, ch, seed)
    truth_img = normalize(truth.astype(np.float64), cfg.width, cfg.height)
    recon_img = normalize(pixels.astype(np.float64), cfg.width, cfg.height)
    return point, trial, ber(truth, pixels), psnr(truth_img, recon_img), pixels


def run_sampling_sweep(cfg: RunConfig) -> str:
    """Reconstruction quality vs sampling multiplier at fixed SNR."""
    cfg.validate()
    scene = load_scene(cfg)
    scene.require_binary()
    run_dir = _prepare_run_dir(cfg)

    jobs = [
        (cfg, scene, p, t, m)
        for p, m in enumerate(cfg.multipliers)
        for t in range(cfg.trials)
    ]
    results = _map_jobs(jobs, _sampling_trial, cfg.threads)
    by_point: dict[int, dict[int, tuple]] = {}
    for point, trial, trial_ber, trial_psnr, pixels in results:
        by_point.setdefault(point, {})[trial] = (trial_ber, trial_psnr, pixels)

    seeds = {
        f"point{p}_trial{t}": derive_trial_seed(cfg.seed, t, p)
        for p in range(len(cfg.multipliers))
        for t in range(cfg.trials)
    }
    write_manifest(run_dir, cfg, seeds)

    csv_path = os.path.join(run_dir, "sampling_sweep.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema: codedgi.sampling-sweep.v1\n")
        fh.write("multiplier,n_total,snr_db,ber_mean,ber_stderr,psnr_mean,trials\n")
        for p, m in enumerate(cfg.multipliers):
            bers = np.array([by_point[p][t][0] for t in range(cfg.trials)])
            psnrs = np.array([by_point[p][t][1] for t in range(cfg.trials)])
            fh.write(
                f"{m},{m * cfg.k_pixels},{cfg.snr_db:g},"
                f"{float(bers.mean())!r},{_stderr(bers)!r},{float(psnrs.mean())!r},{cfg.trials}\n"
            )
            pixels = by_point[p][0][2]
            write_pgm(
                os.path.join(run_dir, f"ldpc_snr{cfg.snr_db:g}_s{m}_t0.pgm"),
                cfg.width,
                cfg.height,
                pixels.astype(np.float64),
            )
    return run_dir


def _compare_trial(args):
    cfg, scene, trial = args
    seed = derive_trial_seed(cfg.seed, trial, 0)
    ch = _channel(cfg, cfg.snr_db)
    truth = np.rint(scene.reflectance).astype(np.uint8)
    n_total = cfg.sampling * cfg.k_pixels

    coded_pixels, _ = _coded_decode_trial(cfg, scene, n_total, ch, seed)

    if cfg.baseline_on_coded:
        spec = CodeSpec(
            k_info=cfg.k_pixels,
            n_total=n_total,
            dist=cfg.degree_distribution(),
            seed=_substream(seed, _SUB_CODE),
        )
        base_ens = patterns_from_generator(build_generator(spec))
    else:
        base_ens = random_speckle(
            cfg.k_pixels, n_total, cfg.speckle_duty, _substream(seed, _SUB_SPECKLE)
        )
    base_meas = sense(base_ens, scene, ch, _substream(seed, _SUB_BASELINE))

    truth_img = normalize(truth.astype(np.float64), cfg.width, cfg.height)
    out = {}
    out["ldpc"] = (
        ber(truth, coded_pixels),
        psnr(truth_img, normalize(coded_pixels.astype(np.float64), cfg.width, cfg.height)),
        coded_pixels.astype(np.float64),
    )
    for name, fn in (("cgi", cgi_reconstruct), ("dgi", dgi_reconstruct), ("pinv", pinv_reconstruct)):
        recon = fn(base_ens, base_meas)
        bits = binarize(recon)
        out[name] = (
            ber(truth, bits),
            psnr(truth_img, normalize(recon.image, cfg.width, cfg.height)),
            recon.image,
        )
    return trial, out


def run_baseline_compare(cfg: RunConfig) -> str:
    """Coded decode vs CGI/DGI/PINV on matched measurement budgets."""
    cfg.validate()
    scene = load_scene(cfg)
    scene.require_binary()
    run_dir = _prepare_run_dir(cfg)

    jobs = [(cfg, scene, t) for t in range(cfg.trials)]
    results = _map_jobs(jobs, _compare_trial, cfg.threads)
    by_trial = dict(results)

    seeds = {f"trial{t}": derive_trial_seed(cfg.seed, t, 0) for t in range(cfg.trials)}
    write_manifest(run_dir, cfg, seeds)

    csv_path = os.path.join(run_dir, "compare.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema: codedgi.compare.v1\n")
        fh.write("method,trial,ber,psnr\n")
        for method in ("ldpc", "cgi", "dgi", "pinv"):
            for t in range(cfg.trials):
                b, p, _ = by_trial[t][method]
                fh.write(f"{method},{t},{b!r},{p!r}\n")
    for method in ("ldpc", "cgi", "dgi", "pinv"):
        image = by_trial[0][method][2]
        img = normalize(image, cfg.width, cfg.height)
        write_pgm(
            os.path.join(run_dir, f"{method}_snr{cfg.snr_db:g}_s{cfg.sampling}_t0.pgm"),
            cfg.width,
            cfg.height,
            img.values,
        )
    return run_dir


def _gray_frame_trial(args):
    cfg, scene, frame = args
    seed = derive_trial_seed(cfg.seed, frame, 0)
    ch = _channel(cfg, cfg.snr_db)
    pixels, _ = _coded_decode_trial(cfg, scene, cfg.sampling * cfg.k_pixels, ch, seed)
    return frame, pixels


def run_grayscale(cfg: RunConfig) -> str:
    """Average 2^bits independent binary decodes into a gray image."""
    cfg.validate()
    scene = load_scene(cfg)
    run_dir = _prepare_run_dir(cfg)
    count = 2**cfg.gray_bits

    jobs = [(cfg, scene, f) for f in range(count)]
    results = _map_jobs(jobs, _gray_frame_trial, cfg.threads)
    frames = [pixels for _, pixels in sorted(results)]

    seeds = {f"frame{f}": derive_trial_seed(cfg.seed, f, 0) for f in range(count)}
    write_manifest(run_dir, cfg, seeds)

    truth = GrayImage(cfg.width, cfg.height, scene.reflectance)
    csv_path = os.path.join(run_dir, "grayscale.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema: codedgi.grayscale.v1\n")
        fh.write("frames,mae\n")
        prefix = 1
        while prefix <= count:
            stack = FrameStack(cfg.width, cfg.height, frames[:prefix])
            mae = mean_abs_error(truth, grayscale_stack(stack))
            fh.write(f"{prefix},{mae!r}\n")
            prefix *= 2
    final = grayscale_stack(FrameStack(cfg.width, cfg.height, frames))
    write_pgm(
        os.path.join(run_dir, f"gray_stack_snr{cfg.snr_db:g}_n{count}.pgm"),
        cfg.width,
        cfg.height,
        final.values,
    )
    write_pgm(os.path.join(run_dir, "gray_truth.pgm"), cfg.width, cfg.height, truth.values)
    return run_dir


def run_experiment(cfg: RunConfig) -> str:
    cfg.validate()
    runner = {
        "sweep-ber": run_ber_sweep,
        "sweep-sampling": run_sampling_sweep,
        "compare": run_baseline_compare,
        "grayscale": run_grayscale,
    }[cfg.experiment]
    return runner(cfg)
