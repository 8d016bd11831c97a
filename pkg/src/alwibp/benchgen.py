"""Worker layers over SALBP base instances, and reproducible suites.

Each disabled worker marks every task infeasible with probability
``incompat_rate``; the remaining tasks get an integer time drawn uniformly
from [t_i, 2 t_i] (low variability) or [t_i, 5 t_i] (high). Random streams
are derived from (seed, base id, configuration) so instances can be generated
in any order or in parallel with identical results.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
import os
import zlib
from dataclasses import dataclass

import numpy as np

from .instance import Instance, InfeasibleError, InstanceError, WorkerProfile, seed_tasks
from .io import format_alb, format_instance, load_base

log = logging.getLogger(__name__)

VARIABILITY = {"low": 2, "high": 5}
MAX_REDRAWS = 100
MANIFEST = "manifest.txt"


@dataclass(frozen=True)
class GenConfig:
    worker_count: int = 1
    variability: str = "low"
    incompat_rate: float = 0.10
    seed: int = 0

    def __post_init__(self):
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if self.variability not in VARIABILITY:
            raise ValueError(f"variability must be one of {sorted(VARIABILITY)}")
        if not 0.0 < self.incompat_rate < 1.0:
            raise ValueError("incompat_rate must lie in (0, 1)")

    @property
    def tag(self) -> str:
        return f"w{self.worker_count}_{self.variability}_i{round(self.incompat_rate * 100):02d}"


def config_grid(seed=0, worker_counts=(1, 2, 3, 4), variabilities=("low", "high"),
                rates=(0.10, 0.20)):
    return [GenConfig(k, v, r, seed)
            for k, v, r in itertools.product(worker_counts, variabilities, rates)]


def _rng(config: GenConfig, base_id: str):
    entropy = [config.seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(base_id.encode("utf-8")),
               config.worker_count, VARIABILITY[config.variability],
               round(config.incompat_rate * 1_000_000)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_workers(base: Instance, config: GenConfig, base_id: str = None) -> tuple:
    if base.workers:
        raise InstanceError("base instance already has workers")
    t = np.asarray(base.times, dtype=np.int64)
    if (t <= 0).any():
        raise InstanceError("base task times must be positive")
    rng = _rng(config, base_id if base_id is not None else base.name)
    factor = VARIABILITY[config.variability]
    C = base.cycle_time
    workers = []
    for k in range(config.worker_count):
        for _ in range(MAX_REDRAWS):
            blocked = rng.random(t.size) < config.incompat_rate
            drawn = rng.integers(t, factor * t, endpoint=True)
            if ((~blocked) & (drawn <= C)).any():
                break
        else:
            raise InstanceError(f"could not draw a usable worker after {MAX_REDRAWS} attempts")
        times = tuple(None if b else int(x) for b, x in zip(blocked, drawn))
        workers.append(WorkerProfile(f"w{k + 1}", times))
    return tuple(workers)


def make_instance(base: Instance, config: GenConfig, base_id: str = None) -> Instance:
    workers = derive_workers(base, config, base_id)
    name = f"{base_id or base.name}_{config.tag}"
    return Instance(base.times, base.precedence, workers, base.cycle_time, name)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _base_files(base_dir):
    names = sorted(f for f in os.listdir(base_dir)
                   if f.endswith((".alb", ".alwibp", ".txt")) and f != MANIFEST)
    return [os.path.join(base_dir, f) for f in names]


def generate_suite(base_dir, configs, out_dir, cycle_time: int = 1000,
                   overwrite: bool = False) -> list:
    """Write one instance per (base file, config) plus ``manifest.txt``.

    Returns the manifest records (dicts). A pre-existing manifest is only
    replaced with ``overwrite=True``.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, MANIFEST)
    if os.path.exists(manifest_path) and not overwrite:
        raise FileExistsError(f"manifest collision: {manifest_path} exists")
    records = []
    names = set()
    for path in _base_files(base_dir) if configs else []:
        base_id = os.path.splitext(os.path.basename(path))[0]
        base = load_base(path, cycle_time)
        for config in configs:
            inst = make_instance(base, config, base_id)
            fname = inst.name + ".alwibp"
            if fname in names:
                raise FileExistsError(f"manifest collision: {fname} generated twice")
            names.add(fname)
            target = os.path.join(out_dir, fname)
            with open(target, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(format_instance(inst))
            records.append({
                "file": fname, "base": os.path.basename(path), "seed": str(config.seed),
                "workers": str(config.worker_count), "variability": config.variability,
                "incompat": f"{config.incompat_rate:.2f}", "cycle": str(cycle_time),
                "sha256": _sha256(target),
            })
    write_manifest(records, manifest_path)
    log.info("wrote %d instances to %s", len(records), out_dir)
    return records


MANIFEST_KEYS = ("file", "base", "seed", "workers", "variability", "incompat", "cycle", "sha256")


def write_manifest(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# alwibp suite manifest: one instance per line\n")
        for rec in records:
            fh.write(" ".join(f"{k}={rec[k]}" for k in MANIFEST_KEYS) + "\n")


def read_manifest(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                out.append(dict(kv.split("=", 1) for kv in line.split()))
    return out


def verify_manifest(out_dir) -> list:
    """Files whose checksum no longer matches the manifest."""
    bad = []
    for rec in read_manifest(os.path.join(out_dir, MANIFEST)):
        path = os.path.join(out_dir, rec["file"])
        if not os.path.exists(path) or _sha256(path) != rec["sha256"]:
            bad.append(rec["file"])
    return bad


def synthetic_base(n: int, seed: int = 0, profile: str = "bottom", cycle_time: int = 1000,
                   name: str = None, chain_prob: float = 0.3, bottleneck_prob: float = 0.05,
                   max_time: int = None) -> Instance:
    """Random SALBP base with chains and bottlenecks.

    ``profile`` "bottom" skews task times towards small values, "bimodal"
    mixes short and long tasks, "uniform" draws from [0.05, 0.6] of the
    cycle time (useful for tiny instances that still need several stations).
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, zlib.crc32(profile.encode())]))
    top = max_time or cycle_time
    if profile == "bottom":
        times = np.minimum(top, 1 + np.floor(rng.exponential(0.12 * top, n))).astype(int)
    elif profile == "bimodal":
        big = rng.random(n) < 0.3
        small = rng.integers(1, max(2, int(0.2 * top)), n, endpoint=True)
        large = rng.integers(int(0.4 * top), int(0.7 * top), n, endpoint=True)
        times = np.where(big, large, small)
    elif profile == "uniform":
        times = rng.integers(max(1, int(0.05 * top)), int(0.6 * top), n, endpoint=True)
    else:
        raise ValueError(f"unknown time profile {profile!r}")
    arcs = set()
    window = max(3, n // 10)
    for j in range(1, n):
        u = rng.random()
        if u < chain_prob:
            arcs.add((j - 1, j))
        elif u < chain_prob + bottleneck_prob:
            lo = max(0, j - window)
            for i in range(lo, j):
                if rng.random() < 0.5:
                    arcs.add((i, j))
        else:
            k = int(rng.integers(0, 3, endpoint=True))
            lo = max(0, j - window)
            for i in rng.choice(np.arange(lo, j), size=min(k, j - lo), replace=False):
                arcs.add((int(i), j))
    return Instance(tuple(int(x) for x in times), sorted(arcs), (), cycle_time,
                    name or f"syn_n{n}_{profile}_{seed}")


def write_synthetic_bases(out_dir, count: int, n: int, seed: int = 0,
                          profiles=("bottom", "bimodal")) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k in range(count):
        profile = profiles[k % len(profiles)]
        base = synthetic_base(n, seed + k, profile, name=f"syn_n{n}_{k:03d}")
        path = os.path.join(out_dir, base.name + ".alb")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_alb(base))
        paths.append(path)
    return paths


def random_instance(seed: int, n: int, worker_count: int, profile: str = "uniform",
                    variability: str = None, incompat_rate: float = None,
                    cycle_time: int = 1000) -> Instance:
    """Small random ALWIBP instance; unset layer parameters are drawn from the seed.

    Worker layers are redrawn (with a salted seed) until every worker can be
    matched to its own feasible task, so some feasible line always exists.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, worker_count, 7]))
    base = synthetic_base(n, seed, profile, cycle_time, name=f"rand_{seed}_n{n}",
                          chain_prob=float(rng.uniform(0.1, 0.5)),
                          bottleneck_prob=float(rng.uniform(0.0, 0.2)))
    if worker_count == 0:
        return base
    config = GenConfig(worker_count,
                       variability or ("low", "high")[int(rng.integers(0, 2))],
                       incompat_rate or (0.10, 0.20)[int(rng.integers(0, 2))],
                       seed)
    for salt in range(MAX_REDRAWS):
        salted = GenConfig(config.worker_count, config.variability, config.incompat_rate,
                           seed + (salt << 32))
        inst = make_instance(base, salted)
        try:
            seed_tasks(inst)
            return inst
        except InfeasibleError:
            continue
    raise InstanceError(f"no jointly feasible worker layer after {MAX_REDRAWS} attempts")
