"""Acceptance gate: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines; every test pins its stated tolerance and wall-clock budget.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from placekit.bench import load_scenario, run_benchmark
from placekit.density import (
    BlendConfig,
    GridSpec,
    KdeConfig,
    WeightedPoints,
    build_density,
    kde_evaluate,
)
from placekit.geometry import Vec3
from placekit.grid import explicit_grid, generate_candidates
from placekit.llm import ChatCompletion
from placekit.physics import builtin_backend
from placekit.pipeline import Engine, PipelineConfig, config_from_dict
from placekit.reasoning import ReceptacleSet
from placekit.scene import parse_scene
from placekit.stability import (
    OrientationTrace,
    SimConfig,
    simulate_placement,
    stable_set,
    sweep_stability,
    trace_is_stable,
)

from conftest import box, make_object, make_scene

SCENARIOS = Path(__file__).resolve().parents[1] / "src" / "placekit" / "scenarios"
TRAY = SCENARIOS / "extra" / "tray_sort.json"


def report(name: str, elapsed: float, budget: float):
    print(f"[PASS] {name} ({elapsed:.2f}s / budget {budget:.0f}s)")
    assert elapsed < budget, f"{name} exceeded its {budget}s budget ({elapsed:.1f}s)"


@pytest.fixture(scope="module")
def small_table():
    table = make_object(
        "table", [box((0.15, 0.15, 0.05))], position=(0, 0, -0.05), static=True
    )
    cube = make_object("cube", [box((0.05, 0.05, 0.05))], mass=0.5)
    return make_scene([table], cube, (-0.4, -0.4, -0.3), (0.4, 0.4, 0.4))


@pytest.fixture(scope="module")
def tray_engine():
    scenario = load_scenario(TRAY)
    cfg = config_from_dict(scenario.config_overrides, base=PipelineConfig())
    return Engine(cfg)


_SHARED: dict = {}


def test_criterion_stability_oracle_equivalence(small_table):
    """Box-on-plane classification matches the analytic support-polygon
    oracle (COM inside the footprint overlap with rest and tilt margins)
    on every point of a 20 x 20 grid."""
    start = time.perf_counter()
    cfg = SimConfig()
    half, table_half, com_h = 0.05, 0.15, 0.05
    tilt = 0.05
    rest_margin = 1e-4

    def oracle(x, y):
        lo_x, hi_x = max(x - half, -table_half), min(x + half, table_half)
        lo_y, hi_y = max(y - half, -table_half), min(y + half, table_half)
        if lo_x >= hi_x or lo_y >= hi_y:
            return False  # no support below the footprint
        if not (lo_x + rest_margin <= x <= hi_x - rest_margin):
            return False
        if not (lo_y + rest_margin <= y <= hi_y - rest_margin):
            return False
        for d in (hi_x - x, x - lo_x, hi_y - y, y - lo_y):
            if tilt > math.atan2(d, com_h):
                return False
        return True

    ticks = -0.19 + 0.02 * np.arange(20)
    points = [(x, y, 0.05) for x in ticks for y in ticks]
    grid = explicit_grid(np.array(points))
    assert len(grid) == 400
    stable, _ = sweep_stability(builtin_backend(), small_table, grid, cfg)
    stable_pts = {(round(p[0], 9), round(p[1], 9)) for p in stable.points_array()}
    mismatches = [
        (x, y)
        for x, y, _ in points
        if ((round(x, 9), round(y, 9)) in stable_pts) != oracle(x, y)
    ]
    assert mismatches == []
    report("stability oracle equivalence (20x20, zero mismatches)",
           time.perf_counter() - start, 10.0)


def test_criterion_tipping_correctness(small_table):
    """60% overhang topples, centered cube rests, 50% overhang resolves
    unstable by the 1e-4 m margin rule."""
    start = time.perf_counter()
    cfg = SimConfig()
    backend = builtin_backend()
    overhang = simulate_placement(backend, small_table, [0.16, 0.0, 0.05], cfg)
    assert not trace_is_stable(overhang, cfg)
    assert overhang.max_deviation() > cfg.stability_tolerance
    centered = simulate_placement(backend, small_table, [0.0, 0.0, 0.05], cfg)
    assert trace_is_stable(centered, cfg)
    edge = simulate_placement(backend, small_table, [0.15, 0.0, 0.05], cfg)
    assert not trace_is_stable(edge, cfg)
    report("tipping correctness (60% / centered / 50% edge)",
           time.perf_counter() - start, 1.0)


def test_criterion_stable_fraction_qualitative():
    """Dish rack at 0.01 m resolution: stable fraction < 0.2; flat-table
    control: > 0.9."""
    start = time.perf_counter()
    cfg = SimConfig()
    rack = load_scenario(SCENARIOS / "bench" / "dish_rack_small.json").scene
    grid = generate_candidates(rack, 0.01, "surface_snap")
    _, diag = sweep_stability(builtin_backend(), rack, grid, cfg)
    assert diag.stable_fraction < 0.2

    flat = parse_scene((SCENARIOS / "extra" / "flat_table_scene.json").read_text())
    flat_grid = generate_candidates(flat, 0.01, "surface_snap")
    _, flat_diag = sweep_stability(builtin_backend(), flat, flat_grid, cfg)
    assert flat_diag.stable_fraction > 0.9
    report(
        f"stable-fraction reproduction (rack {diag.stable_fraction:.3f} < 0.2, "
        f"flat {flat_diag.stable_fraction:.3f} > 0.9)",
        time.perf_counter() - start,
        60.0,
    )


def test_criterion_slot_gap_monotonicity():
    """Widening the dish-rack slot gap never shrinks the stable set."""
    start = time.perf_counter()
    cfg = SimConfig()
    counts = {}
    for sid in ("dish_rack_small", "dish_rack_medium", "dish_rack_large"):
        scene = load_scenario(SCENARIOS / "bench" / f"{sid}.json").scene
        grid = generate_candidates(scene, 0.01, "surface_snap")
        stable, _ = sweep_stability(builtin_backend(), scene, grid, cfg)
        counts[sid] = len(stable)
    assert (
        counts["dish_rack_small"]
        <= counts["dish_rack_medium"]
        <= counts["dish_rack_large"]
    )
    report(
        "slot-gap monotonicity (|P_s| {} <= {} <= {})".format(
            counts["dish_rack_small"],
            counts["dish_rack_medium"],
            counts["dish_rack_large"],
        ),
        time.perf_counter() - start,
        120.0,
    )


def test_criterion_kde_oracle():
    """Weighted KDE matches an independent direct-summation oracle to 1e-9
    relative on 50 random support points and 20 queries."""
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    pts = rng.uniform(-0.5, 0.5, size=(50, 3))
    weights = rng.uniform(0.0, 2.0, size=50)
    queries = rng.uniform(-0.6, 0.6, size=(20, 3))
    cfg = KdeConfig(bandwidth=0.05)
    support = WeightedPoints(points=pts, weights=weights)
    values = kde_evaluate(support, cfg, queries)
    for q, v in zip(queries, values):
        total = 0.0
        for p, w in zip(pts, weights):
            d2 = float((q[0]-p[0])**2 + (q[1]-p[1])**2 + (q[2]-p[2])**2)
            total += w * math.exp(-d2 / (2 * cfg.bandwidth**2))
        expected = total / (len(pts) * cfg.bandwidth)
        assert abs(v - expected) <= 1e-9 * max(1.0, abs(expected))
    report("KDE direct-summation oracle (rel err <= 1e-9)",
           time.perf_counter() - start, 1.0)


def _stable_fixture():
    cfg = SimConfig(steps=4, stability_tolerance=0.2)
    rng = np.random.default_rng(5)
    traces = []
    for i in range(12):
        swing = float(rng.uniform(0.0, 0.05))
        samples = np.array([0.9, 0.9 + swing, 0.9, 0.9])
        traces.append(
            OrientationTrace(
                point=Vec3(*rng.uniform(-0.3, 0.3, size=3)),
                samples=samples,
                settled=True,
                penetrated=False,
            )
        )
    return stable_set(traces, cfg)


def test_criterion_beta_endpoints():
    """Blended density: beta=1 equals the stability-only field pointwise,
    beta=0 concentrates on rewarded points, and the default beta is 0.1."""
    start = time.perf_counter()
    stable = _stable_fixture()
    pts = stable.points_array()
    rng = np.random.default_rng(9)
    rewards = (rng.uniform(size=len(pts)) < 0.4).astype(float)
    rewards[0] = 1.0  # ensure at least one rewarded point
    rec = ReceptacleSet(points=pts, rewards=rewards, receptacle_ids=("r",), radius=0.1)
    rec_none = ReceptacleSet(
        points=pts, rewards=np.zeros(len(pts)), receptacle_ids=("r",), radius=0.1
    )
    kde_cfg = KdeConfig(bandwidth=0.05)

    field_one = build_density(stable, rec, BlendConfig(beta=1.0), kde_cfg)
    field_one_none = build_density(stable, rec_none, BlendConfig(beta=1.0), kde_cfg)
    queries = rng.uniform(-0.4, 0.4, size=(64, 3))
    diff = np.abs(field_one.evaluate(queries) - field_one_none.evaluate(queries))
    assert np.max(diff) <= 1e-12

    spec = GridSpec(
        origin=(-0.35, -0.35, -0.35), spacing=(0.02, 0.02, 0.02), dims=(36, 36, 36)
    )
    field_zero = build_density(stable, rec, BlendConfig(beta=0.0), kde_cfg, grid_spec=spec)
    argmax = spec.points()[int(np.argmax(field_zero.grid_values))]
    rewarded = pts[rewards == 1.0]
    assert np.min(np.linalg.norm(rewarded - argmax, axis=1)) <= kde_cfg.bandwidth

    assert BlendConfig().beta == 0.1
    assert PipelineConfig().blend.beta == 0.1
    report("beta endpoints (beta=1 pointwise 1e-12, beta=0 argmax within h, default 0.1)",
           time.perf_counter() - start, 5.0)


def test_criterion_deterministic_reasonableness(tray_engine):
    """Color-sorting tray fixture with the rule reasoner: 20 repetitions
    with per-repetition seeds all select a stable, reasonable point."""
    start = time.perf_counter()
    scenario = load_scenario(TRAY)
    report_ = run_benchmark([scenario], cfg=tray_engine.cfg, engine=tray_engine)
    _SHARED["default_report"] = report_
    row = report_.rows[0]
    assert row.scenario_id == "tray_sort"
    assert row.repetitions == 20
    assert row.reasonableness_success_rate == 1.0
    assert row.stability_success_rate == 1.0
    report("deterministic end-to-end reasonableness (Rea 1.0, Sta 1.0, 20 reps)",
           time.perf_counter() - start, 120.0)


def test_criterion_protocol_fidelity(tray_engine):
    """Bench defaults: 10 candidates per plan, 20 repetitions per scenario."""
    start = time.perf_counter()
    default_bench_report = _SHARED["default_report"]
    assert default_bench_report.candidates_per_plan == 10
    assert default_bench_report.repetitions == 20
    scenario = load_scenario(TRAY)
    plan = tray_engine.plan(scenario.scene, scenario.task)
    assert len(plan.candidates.candidates) == 10
    report("protocol fidelity (10 candidates/plan, 20 reps default)",
           time.perf_counter() - start, 30.0)


def test_criterion_token_metrics(tray_engine):
    """A mock chat transport reporting usage (362, 5) yields a token mean
    of exactly 367 in the report."""
    start = time.perf_counter()

    class FixedUsage:
        def complete(self, messages, temperature=0.0):
            return ChatCompletion(content="tray_2", prompt_tokens=362, completion_tokens=5)

    scenario = load_scenario(TRAY)
    cfg = config_from_dict({"reasoner": "llm"}, base=tray_engine.cfg)
    rep = run_benchmark(
        [scenario], repetitions=2, cfg=cfg, chat_client=FixedUsage(), engine=tray_engine
    )
    assert rep.rows[0].tokens_mean == 367.0
    report("token metrics plumbing (362 + 5 -> mean 367)",
           time.perf_counter() - start, 1.0)


def _strip_time_columns(report_text: str) -> bytes:
    lines = []
    for line in report_text.strip().split("\n"):
        cols = line.split(",")
        del cols[4:6]
        lines.append(",".join(cols))
    return "\n".join(lines).encode()


def test_criterion_bench_determinism():
    """Two full bench runs agree byte for byte outside the wall-time columns."""
    start = time.perf_counter()
    suite = [
        load_scenario(TRAY),
        load_scenario(SCENARIOS / "bench" / "category_shelf.json"),
    ]
    a = run_benchmark(suite, repetitions=2)
    b = run_benchmark(suite, repetitions=2)
    assert _strip_time_columns(a.to_delimited()) == _strip_time_columns(b.to_delimited())
    assert json.dumps(a.config, sort_keys=True) == json.dumps(b.config, sort_keys=True)
    report("bench determinism (byte-identical minus wall time)",
           time.perf_counter() - start, 120.0)
