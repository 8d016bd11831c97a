import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alwibp.benchgen import (MANIFEST, GenConfig, config_grid, derive_workers, generate_suite,
                             make_instance, random_instance, read_manifest, synthetic_base,
                             verify_manifest, write_synthetic_bases)
from alwibp.instance import Instance, InstanceError, seed_tasks
from alwibp.io import load_instance


def test_grid_has_sixteen_cells():
    grid = config_grid()
    assert len(grid) == 16 and len({c.tag for c in grid}) == 16


def test_config_validation():
    for bad in (dict(worker_count=0), dict(variability="mid"), dict(incompat_rate=1.0)):
        with pytest.raises(ValueError):
            GenConfig(**bad)


def test_times_within_range():
    base = synthetic_base(200, seed=3)
    for var, f in (("low", 2), ("high", 5)):
        for w in derive_workers(base, GenConfig(4, var, 0.2, 11)):
            for t, tw in zip(base.times, w.times):
                if tw is not None:
                    assert t <= tw <= f * t


def test_incompatibility_rate():
    base = synthetic_base(500, seed=5, profile="uniform")
    for rate in (0.10, 0.20):
        marks = [tw is None for seed in range(40)
                 for w in derive_workers(base, GenConfig(1, "low", rate, seed)) for tw in w.times]
        assert abs(np.mean(marks) - rate) <= 0.01


def test_whole_worker_is_redrawn():
    # one task, near-certain blocking: retried until the worker has a usable task
    base = Instance((500,), cycle_time=1000, name="one")
    w = derive_workers(base, GenConfig(1, "low", 0.9, 2))[0]
    assert w.times[0] is not None and w.times[0] <= 1000
    with pytest.raises(InstanceError, match="already has workers"):
        derive_workers(Instance((500,), [], (w,), 1000), GenConfig())


def test_determinism_and_order_independence():
    base = synthetic_base(30, seed=1)
    a = make_instance(base, GenConfig(2, "high", 0.2, 9), "b1")
    _ = make_instance(base, GenConfig(3, "low", 0.1, 9), "b2")
    assert make_instance(base, GenConfig(2, "high", 0.2, 9), "b1") == a
    assert make_instance(base, GenConfig(2, "high", 0.2, 10), "b1") != a


def test_random_instance_is_jointly_feasible():
    for seed in range(200):
        inst = random_instance(seed, 4 + seed % 5, 1 + seed % 3)
        seed_tasks(inst)  # raises if the workers cannot each take a task
        assert random_instance(seed, 4 + seed % 5, 1 + seed % 3) == inst


def test_suite_manifest(tmp_path):
    bases = tmp_path / "bases"
    write_synthetic_bases(bases, 3, 12, seed=4)
    out = tmp_path / "suite"
    recs = generate_suite(bases, config_grid(seed=1), out)
    assert len(recs) == 48 and len(read_manifest(out / MANIFEST)) == 48
    assert verify_manifest(out) == []
    inst = load_instance(out / recs[0]["file"])
    assert len(inst.workers) == int(recs[0]["workers"])
    with pytest.raises(FileExistsError, match="collision"):
        generate_suite(bases, config_grid(seed=1), out)
    first = (out / recs[5]["file"]).read_bytes()
    generate_suite(bases, config_grid(seed=1), out, overwrite=True)
    assert (out / recs[5]["file"]).read_bytes() == first
    p = out / recs[7]["file"]
    p.write_text(p.read_text() + "\n")
    assert verify_manifest(out) == [recs[7]["file"]]


def test_empty_grid(tmp_path):
    write_synthetic_bases(tmp_path / "b", 2, 8)
    assert generate_suite(tmp_path / "b", [], tmp_path / "o") == []
    assert read_manifest(tmp_path / "o" / MANIFEST) == []


def test_hundred_bases_full_grid(tmp_path):
    write_synthetic_bases(tmp_path / "b", 100, 6, seed=7)
    recs = generate_suite(tmp_path / "b", config_grid(seed=3), tmp_path / "o")
    files = [f for f in os.listdir(tmp_path / "o") if f.endswith(".alwibp")]
    assert len(recs) == len(files) == 1600


@settings(max_examples=50, deadline=None)
@given(st.integers(5, 40), st.integers(0, 10**6), st.sampled_from(config_grid()))
def test_generated_instances_are_valid(n, seed, config):
    base = synthetic_base(n, seed)
    inst = make_instance(base, GenConfig(config.worker_count, config.variability,
                                         config.incompat_rate, seed))
    assert inst.times == base.times and inst.precedence == base.precedence
    for w in inst.workers:
        assert any(t is not None and t <= inst.cycle_time for t in w.times)
