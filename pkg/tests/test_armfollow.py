import math

import numpy as np
import pytest

from basetraj.armfollow import (NoSolution, fk_world, solve_arm_ik, solve_arm_trajectory,
                                world_to_base)
from basetraj.reachability import ArmModel
from basetraj.spacetime import GridSpec
from basetraj.world import EEPose, EETrajectory

ARM = ArmModel()


def ee_traj(points, dt=1.0):
    return EETrajectory(tuple(EEPose(tuple(map(float, p))) for p in points), dt)


def fixed_base(n, spec=None):
    spec = spec or GridSpec(dt=1.0, dv_x=0.1, dv_y=0.1, domega=math.pi / 4, v_max=0.1,
                            omega_max=math.pi / 4, n_stages=n - 1)
    return [spec.event(i, 0, 0, 0) for i in range(n)]


def test_full_extension_single_solution():
    p = (ARM.x_j2 + ARM.L1 + ARM.L2, 0.0, ARM.z_j2)
    sols = solve_arm_ik(ARM, (0.0, 0.0, 0.0), EEPose(p))
    assert len(sols) == 1 and sols[0][2] == 0.0


def test_elbow_right_angle_pair():
    arm = ArmModel(L1=0.4, L2=0.4, elbow_limits=(-3, 3), wrist_limits=(-3, 3),
                   shoulder_limits=(-3, 3))
    d = 0.4 * math.sqrt(2)
    base = (1.0, 2.0, math.pi / 3)
    c, s = math.cos(base[2]), math.sin(base[2])
    fx = arm.x_j2 + d
    p = (base[0] + c * fx, base[1] + s * fx, arm.z_j2)
    elbows = sorted(q[2] for q in solve_arm_ik(arm, base, p) if abs(q[0]) < 1e-9)
    assert elbows == pytest.approx([-math.pi / 2, math.pi / 2], abs=1e-12)


def test_inside_inner_sphere_no_solution():
    with pytest.raises(NoSolution):
        solve_arm_ik(ARM, (0.0, 0.0, 0.0), (ARM.x_j2, 0.0, ARM.z_j2 - 0.01))


def test_fk_roundtrip_world():
    rng = np.random.default_rng(4)
    n = 0
    while n < 200:
        base = (rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-math.pi, math.pi))
        p = np.array([rng.uniform(-3, 3), rng.uniform(-3, 3), 0.05])
        try:
            sols = solve_arm_ik(ARM, base, p)
        except NoSolution:
            continue
        n += 1
        for q in sols:
            pw, aw = fk_world(ARM, base, q)
            assert np.allclose(pw, p, atol=1e-9)
            assert math.acos(min(1.0, -aw[2])) <= ARM.alpha_max + 1e-9
            assert all(lo - 1e-12 <= v <= hi + 1e-12 for v, (lo, hi) in zip(q, ARM.limits))


def test_world_to_base():
    assert np.allclose(world_to_base((1, 1, math.pi / 2), (1, 2, 0.3)), (1, 0, 0.3))


def test_stationary_constant():
    ee = ee_traj([(0.7, 0.1, 0.05)] * 5)
    jt = solve_arm_trajectory(fixed_base(5), ee, ARM)
    assert (jt.q == jt.q[0]).all() and not jt.max_jump.any() and jt.continuous


def test_jumps_match_finite_difference():
    xs = np.linspace(0.6, 0.7, 11)
    pts = [(x, 0.1, 0.05) for x in xs]
    jt = solve_arm_trajectory(fixed_base(len(pts)), ee_traj(pts), ARM)
    eps = 1e-5
    for i in range(len(pts) - 1):
        mid = (xs[i] + xs[i + 1]) / 2

        def branch(x):
            sols = solve_arm_ik(ARM, (0, 0, 0), (x, 0.1, 0.05))
            return np.array(min(sols, key=lambda q: np.abs(np.subtract(q, jt.q[i])).max()))
        deriv = (branch(mid + eps) - branch(mid - eps)) / (2 * eps)
        jump = jt.q[i + 1] - jt.q[i]
        assert np.allclose(jump, deriv * (xs[i + 1] - xs[i]), atol=2e-4)
    assert jt.continuous


def test_full_extension_crossing_flagged():
    reach = ARM.L1 + ARM.L2
    rs = [reach - 0.08, reach - 0.04, reach, reach - 0.04, reach - 0.08]
    pts = [(ARM.x_j2 + r, 0.0, ARM.z_j2) for r in rs]
    jt = solve_arm_trajectory(fixed_base(5), ee_traj(pts), ARM)
    assert jt.flagged and jt.max_jump.max() > jt.threshold


def test_passing_yaw_axis_flagged():
    ys = np.linspace(-0.2, 0.2, 8)
    pts = [(ARM.x_j2 + 0.01, y, 0.05) for y in ys]
    jt = solve_arm_trajectory(fixed_base(len(pts)), ee_traj(pts), ARM)
    assert 3 in jt.flagged


def test_no_solution_names_stage():
    pts = [(0.7, 0.0, 0.05), (0.7, 0.0, 0.05), (5.0, 0.0, 0.05)]
    with pytest.raises(NoSolution) as ei:
        solve_arm_trajectory(fixed_base(3), ee_traj(pts), ARM)
    assert ei.value.stage == 2 and "stage 2" in str(ei.value)


def test_joint_csv(tmp_path):
    ee = ee_traj([(0.7, 0.1, 0.05)] * 3, dt=2.0)
    spec = GridSpec(dt=2.0, dv_x=0.1, dv_y=0.1, domega=math.pi / 4, v_max=0.1,
                    omega_max=math.pi / 4, n_stages=2)
    jt = solve_arm_trajectory(fixed_base(3, spec), ee, ARM)
    jt.to_csv(tmp_path / "j.csv")
    lines = (tmp_path / "j.csv").read_text().splitlines()
    assert lines[0] == "t,q1,q2,q3,q4" and len(lines) == 4
    assert [float(v) for v in lines[2].split(",")] == [2.0, *jt.q[1].tolist()]
