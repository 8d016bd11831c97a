import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alwibp.cih import run_best_of_four
from alwibp.instance import Instance, InstanceError, LineSolution, Station, WorkerProfile, is_feasible
from alwibp.mip import (LS1, LS2, SMIN, ModelError, MipModel, SolverSolution, build_alwibp1,
                        build_ls, build_smin, check_solution, emit_lp, feasible_region_contains,
                        format_values, parse_lp, parse_values, smin_big_m, solution_values, station_lower_bound,
                        values_to_solution)
from alwibp.mipsolve import solve_exhaustive
from alwibp.oracle import exact_alwibp1, exact_smin

from helpers import has_line, instances, line, t1, worker

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
T1W = t1([worker("w1", (800, 1000, 600))])


def _golden(name):
    with open(os.path.join(GOLDEN, name)) as fh:
        return fh.read()


def test_t1_model_shape():
    model = build_alwibp1(t1(), 3)
    xs = [v.name for v in model.variables if v.name.startswith("x_")]
    assert len(xs) == 12 and not any(v.name.startswith("y_") for v in model.variables)
    assert model.objective == (("x_1_q", 1), ("x_2_q", 2), ("x_3_q", 3))
    assert emit_lp(model) == _golden("t1_alwibp1_s3.lp")


def test_t1_optimum():
    res = solve_exhaustive(build_alwibp1(t1(), 3))
    assert res.proven and res.objective == 2


def test_identical_worker_optimum():
    inst = t1([worker("w1", (400, 500, 300))])
    res = solve_exhaustive(build_alwibp1(inst, 3))
    assert res.objective == 2
    assert is_feasible(inst, values_to_solution(inst, res.solution.values))


def test_single_task_single_worker():
    inst = Instance((700,), [], (WorkerProfile("w1", (900,)),), 1000)
    res = solve_exhaustive(build_alwibp1(inst, 1))
    vals = res.solution.values
    assert res.objective == 1 and vals["y_1_1"] == 1 and vals["x_1_1"] == 1


def test_smin_exact_optimum():
    # Worker on task 2 alone leaves zero idle: 2 + 0/1000.
    model = build_smin(T1W, 2)
    res = solve_exhaustive(model)
    assert res.objective == pytest.approx(2.0)
    assert exact_smin(T1W).pair == (2, 0)
    cih = solution_values(model, line({1, 2}, ({3}, 0)))
    assert cih.objective == pytest.approx(2.4)
    assert check_solution(model, cih).ok


def test_smin_golden_and_weight():
    inst = Instance(T1W.times, T1W.precedence,
                    (WorkerProfile("a", (800, 1000, 600)), WorkerProfile("b", (400, 500, 300))),
                    1000, "T1")
    assert "0.0005 delta_1" in emit_lp(build_smin(inst, 3))
    from alwibp.io import load_instance
    here = os.path.join(os.path.dirname(__file__), "..", "src", "alwibp", "data", "t1w.alwibp")
    assert emit_lp(build_smin(load_instance(here))) == _golden("t1w_smin.lp")


def test_objective_only_lp():
    model = MipModel("bare")
    model.add_variable("z")
    model.objective = (("z", 1),)
    text = emit_lp(model)
    assert "Subject To" not in text and "Bounds" not in text
    assert "Binaries" in text and text.endswith("End\n")
    assert emit_lp(parse_lp(text)) == text


def test_check_solution_cases():
    model = build_alwibp1(T1W, 2)
    opt = exact_alwibp1(T1W)
    assert not check_solution(model, solution_values(model, opt.solution)).violations
    bad = solution_values(model, line(({3}, 0), {1, 2}))
    names = [n for n, _ in check_solution(model, bad).violations]
    assert any(n.startswith("c5_i1_j3") for n in names)
    zero = SolverSolution({v.name: 0.0 for v in model.variables})
    names = {n for n, _ in check_solution(model, zero).violations}
    assert {"c2_i1", "c2_i2", "c2_i3", "c2_iq"} <= names


def test_reported_objective_is_checked():
    model = build_alwibp1(t1(), 2)
    sol = solution_values(model, line({1, 2}, {3}))
    assert check_solution(model, SolverSolution(sol.values, 2.0)).ok
    assert not check_solution(model, SolverSolution(sol.values, 2.1)).objective_ok


def test_errors():
    model = build_alwibp1(t1(), 2)
    with pytest.raises(ModelError, match="unknown variable"):
        check_solution(model, SolverSolution({"x_9_9": 1.0}))
    with pytest.raises(ModelError, match="lower bound"):
        build_alwibp1(t1(), 1)
    with pytest.raises(ModelError):
        build_smin(t1())
    with pytest.raises(InstanceError):
        build_ls(T1W, line({3}, ({1, 2}, 0)))


def test_values_file_roundtrip():
    model = build_alwibp1(T1W, 2)
    sol = solution_values(model, line({1, 2}, ({3}, 0)))
    back = parse_values(format_values(sol, model))
    # zeros are left out of the file
    assert back.values == {k: v for k, v in sol.values.items() if v}
    assert back.objective == sol.objective


def test_ls2_windows():
    cih = line({1, 2}, ({3}, 0))
    model = build_ls(T1W, cih, LS2)
    for name in ("c18_i1", "c18_i2", "c19_i3"):
        con = model.constraint(name)
        assert {v for v, _ in con.terms} == {f"x_1_{name[-1]}", f"x_2_{name[-1]}"}
        assert con.sense == "=" and con.rhs == 1
    assert model.constraint("c15_w1").terms == (("y_2_1", 1),)


def test_ls_inclusion_and_start():
    cih = run_best_of_four(T1W).solution
    ls1 = build_ls(T1W, cih, LS1)
    ls2 = build_ls(T1W, cih, LS2)
    assert feasible_region_contains(ls1, ls2) == []
    assert feasible_region_contains(ls2, ls1) != []
    for model in (ls1, ls2, build_ls(T1W, cih, LS1, SMIN), build_ls(T1W, cih, LS2, SMIN)):
        assert check_solution(model, solution_values(model, cih)).ok
        res = solve_exhaustive(model)
        assert res.objective <= solution_values(model, cih).objective + 1e-9


def test_emit_parse_roundtrip_t1w():
    for model in (build_alwibp1(T1W, 3), build_smin(T1W, 3), build_ls(T1W, line({1, 2}, ({3}, 0)), LS2)):
        text = emit_lp(model)
        back = parse_lp(text)
        assert emit_lp(back) == text
        assert [c.name for c in back.constraints] == [c.name for c in model.constraints]


# -- properties -----------------------------------------------------------------

def _random_line(inst, rnd):
    """A random line with non-empty stations (task order respected or not)."""
    n = inst.task_count
    m = rnd.randint(max(1, len(inst.workers)), n)
    assign = [rnd.randrange(m) for _ in range(n)]
    for s in range(m):  # make every station non-empty
        if s not in assign:
            assign[rnd.randrange(n)] = s
    if len(set(assign)) < m:
        return None
    places = rnd.sample(range(m), len(inst.workers))
    who = {s: k for k, s in enumerate(places)}
    return LineSolution(tuple(Station(frozenset(i for i in range(n) if assign[i] == s), who.get(s))
                              for s in range(m)))


@settings(max_examples=150, deadline=None)
@given(instances(max_n=6, max_workers=2), st.integers(0, 10**6))
def test_model_agrees_with_validator(inst, seed):
    sol = _random_line(inst, random.Random(seed))
    if sol is None:
        return
    model = build_alwibp1(inst, max(len(sol), station_lower_bound(inst)))
    verdict = check_solution(model, solution_values(model, sol))
    assert verdict.ok == is_feasible(inst, sol)


@settings(max_examples=100, deadline=None)
@given(instances(max_n=7, max_workers=3), st.data())
def test_big_m_covers_any_conventional_station(inst, data):
    # a task set that fits a conventional station never binds the worker capacity rows
    C = inst.cycle_time
    subset = data.draw(st.sets(st.integers(0, inst.task_count - 1)))
    if sum(inst.times[i] for i in subset) > C:
        return
    for k, w in enumerate(inst.workers):
        load = sum(w.times[i] for i in subset if w.can_do(i))
        L = build_alwibp1(inst, inst.task_count).meta["big_m"][k]
        assert load <= C + L
        assert C + L - load <= smin_big_m(inst, k)


@settings(max_examples=60, deadline=None)
@given(instances(max_n=7, max_workers=2))
def test_cih_line_is_ls_feasible(inst):
    if not inst.workers or not has_line(inst):
        return
    cih = run_best_of_four(inst).solution
    for mode in (LS1, LS2):
        model = build_ls(inst, cih, mode)
        assert check_solution(model, solution_values(model, cih)).ok


@settings(max_examples=60, deadline=None)
@given(instances(max_n=6, max_workers=2))
def test_smin_secondary_term_below_one(inst):
    if not inst.workers:
        return
    res = exact_smin(inst)
    if res.solution is None:
        return
    model = build_smin(inst, len(res.solution))
    sol = solution_values(model, res.solution)
    assert check_solution(model, sol).ok
    W = len(inst.workers)
    secondary = sum(sol.values[f"delta_{k + 1}"] for k in range(W)) / (inst.cycle_time * W)
    assert 0 <= secondary < 1
    assert sol.objective == pytest.approx(len(res.solution) + res.idle / (inst.cycle_time * W))


@settings(max_examples=40, deadline=None)
@given(instances(max_n=6, max_workers=2))
def test_emit_is_deterministic(inst):
    a = emit_lp(build_alwibp1(inst, inst.task_count))
    b = emit_lp(build_alwibp1(inst, inst.task_count))
    assert a == b and emit_lp(parse_lp(a)) == a
