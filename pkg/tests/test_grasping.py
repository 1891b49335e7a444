import numpy as np
import pytest

from shopsim.demo import demo_store
from shopsim.errors import NoInstance, PlanInfeasible, SignalError
from shopsim.grasping import (
    ExtractionType,
    GraspSignals,
    GraspType,
    InstanceDetection,
    Tool,
    TOOL_FOR_GRASP,
    classify_catalog,
    classify_extraction,
    classify_grasp,
    grasp_pose,
    plan_grasp,
    select_instance,
    simulate_grasp_outcome,
    verify_grasp,
)
from shopsim.store import ItemRecord


def make_item(item_id="x", dims=(0.1, 0.1, 0.2), mass=1.0, anchor=None, **attrs):
    return ItemRecord(
        id=item_id,
        dimensions=dims,
        mass=mass,
        pose=(0.0, 0.0, 0.0, 0.0),
        outward_axis=(1.0, 0.0),
        attributes=attrs,
        handle_anchor=anchor,
    )


def test_handle_wins_classification():
    assert classify_grasp(make_item(has_handle=True, deformable=True, mass=3.0)) is GraspType.HANDLE_GRASP


def test_heavy_deformable_threshold():
    assert classify_grasp(make_item(deformable=True, mass=1.6)) is GraspType.HEAVY_DEFORMABLE_GRASP
    assert classify_grasp(make_item(deformable=True, mass=1.4)) is not GraspType.HEAVY_DEFORMABLE_GRASP


def test_cap_grasp():
    assert classify_grasp(make_item(has_cap=True)) is GraspType.CAP_GRASP


def test_suction_face_rule():
    assert classify_grasp(make_item(dims=(0.1, 0.2, 0.3))) is GraspType.SUCTION_GRASP
    assert classify_grasp(make_item(dims=(0.1, 0.02, 0.3))) is GraspType.FLAT_CYLINDRICAL_PINCH


def test_extraction_rules():
    assert classify_extraction(make_item(hangs_on_hook=True)) is ExtractionType.HOOK
    assert classify_extraction(make_item(in_box=True)) is ExtractionType.BOX
    assert classify_extraction(make_item(has_handle=True, mass=2.5)) is ExtractionType.JUG
    assert classify_extraction(make_item(has_handle=True, mass=1.5)) is ExtractionType.LIP_FREE_SHELF
    assert classify_extraction(make_item()) is ExtractionType.LIP_FREE_SHELF


def test_classification_total_and_deterministic():
    store = demo_store(200, seed=5)
    cache = classify_catalog(store)
    assert set(cache) == {it.id for it in store.items}
    for item in store.items:
        g, e = cache[item.id]
        assert isinstance(g, GraspType) and isinstance(e, ExtractionType)
        assert classify_grasp(item) is g
        assert classify_extraction(item) is e


def test_enums_have_fixed_cardinality():
    assert len(GraspType) == 5
    assert len(ExtractionType) == 4


def test_select_instance_single():
    assert select_instance([InstanceDetection(position=np.zeros(3))]) == 0


def test_select_instance_prefers_front():
    dets = [
        InstanceDetection(position=np.array([0.3, 0.0, 0.0])),
        InstanceDetection(position=np.array([0.1, 0.0, 0.0])),
    ]
    assert select_instance(dets) == 1


def test_select_instance_tie_breaks_leftmost():
    dets = [
        InstanceDetection(position=np.array([0.1, 0.2, 0.0])),
        InstanceDetection(position=np.array([0.1, -0.2, 0.0])),
    ]
    assert select_instance(dets) == 1


def test_select_instance_skips_occluded():
    dets = [
        InstanceDetection(position=np.array([0.0, 0.0, 0.0]), occluded=True),
        InstanceDetection(position=np.array([0.5, 0.0, 0.0])),
    ]
    assert select_instance(dets) == 1


def test_select_instance_permutation_stable(rng):
    dets = [
        InstanceDetection(position=rng.random(3), occluded=bool(rng.random() < 0.3))
        for _ in range(6)
    ]
    if all(d.occluded for d in dets):
        dets[0].occluded = False
    base = select_instance(dets)
    base_pos = dets[base].position
    for _ in range(10):
        perm = rng.permutation(len(dets))
        chosen = select_instance([dets[i] for i in perm])
        assert np.allclose([dets[i] for i in perm][chosen].position, base_pos)


def test_select_instance_errors():
    with pytest.raises(NoInstance):
        select_instance([])
    with pytest.raises(NoInstance):
        select_instance([InstanceDetection(position=np.zeros(3), occluded=True)])


def test_suction_pose_on_outward_face():
    item = make_item(dims=(0.1, 0.2, 0.3))
    T = grasp_pose(item, GraspType.SUCTION_GRASP)
    assert np.allclose(T[:3, 3], [0.05, 0.0, 0.15])
    # approach direction (tool x) points into the shelf
    assert np.allclose(T[:3, 0], [-1.0, 0.0, 0.0])


def test_cap_pose_at_item_top():
    item = make_item(dims=(0.08, 0.08, 0.24), has_cap=True)
    T = grasp_pose(item, GraspType.CAP_GRASP)
    assert T[2, 3] == pytest.approx(0.24)


def test_handle_pose_uses_anchor():
    item = make_item(has_handle=True, anchor=(0.02, 0.01, 0.18))
    T = grasp_pose(item, GraspType.HANDLE_GRASP)
    assert np.allclose(T[:3, 3], [0.02, 0.01, 0.18])


def test_handle_pose_without_handle_infeasible():
    with pytest.raises(PlanInfeasible):
        grasp_pose(make_item(), GraspType.HANDLE_GRASP)


def test_grasp_pose_within_inflated_bounds(rng):
    store = demo_store(100, seed=9)
    for item in store.items:
        g = classify_grasp(item)
        T = grasp_pose(item, g)
        rel = T[:3, 3] - np.array([item.pose[0], item.pose[1], item.pose[2]])
        half = item.dimensions / 2 + 0.05
        assert abs(rel[0]) <= half[0] + 1e-9
        assert abs(rel[1]) <= half[1] + 1e-9
        assert -1e-9 <= rel[2] <= item.dimensions[2] + 0.05


def test_plan_grasp_tool_consistency():
    store = demo_store(60, seed=2)
    for item in store.items:
        plan = plan_grasp(item)
        assert plan.tool is TOOL_FOR_GRASP[plan.grasp_type]
        if plan.grasp_type in (GraspType.SUCTION_GRASP, GraspType.HEAVY_DEFORMABLE_GRASP):
            assert plan.tool is Tool.SUCTION
        else:
            assert plan.tool is Tool.PARALLEL_JAW


def test_outcome_probability_extremes(rng):
    item = make_item(dims=(0.1, 0.2, 0.3))
    plan = plan_grasp(item)
    for _ in range(50):
        ok, _ = simulate_grasp_outcome(plan, item, rng, success_prob=1.0)
        assert ok
        ok, _ = simulate_grasp_outcome(plan, item, rng, success_prob=0.0)
        assert not ok


def test_outcome_empirical_rate(rng):
    item = make_item(dims=(0.1, 0.2, 0.3))
    plan = plan_grasp(item)
    hits = sum(
        simulate_grasp_outcome(plan, item, rng, success_prob=0.7)[0] for _ in range(10_000)
    )
    assert hits / 10_000 == pytest.approx(0.7, abs=0.02)


def test_verify_round_trip_all_types(rng):
    store = demo_store(60, seed=4)
    for item in store.items:
        plan = plan_grasp(item)
        weight = item.mass * 9.81
        ok, signals = simulate_grasp_outcome(plan, item, rng, success_prob=1.0)
        assert verify_grasp(signals, plan.tool, weight)
        ok, signals = simulate_grasp_outcome(plan, item, rng, success_prob=0.0)
        assert not verify_grasp(signals, plan.tool, weight)


def test_verify_closed_fingers_false():
    assert not verify_grasp(
        GraspSignals(tip_wrench=5.0, finger_gap=0.0), Tool.PARALLEL_JAW, 5.0
    )


def test_verify_broken_seal_false():
    assert not verify_grasp(
        GraspSignals(tip_wrench=5.0, pressure=0.9), Tool.SUCTION, 5.0
    )


def test_verify_missing_signal_errors():
    with pytest.raises(SignalError):
        verify_grasp(GraspSignals(tip_wrench=1.0), Tool.PARALLEL_JAW, 1.0)
    with pytest.raises(SignalError):
        verify_grasp(GraspSignals(tip_wrench=1.0, finger_gap=0.1), Tool.SUCTION, 1.0)
