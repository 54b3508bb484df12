import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from basetraj.spacetime import (Control, GridError, GridSpec, InadmissibleStep, apply_control,
                                build_control_set, displacement_cost, step_cost, total_cost,
                                wrap_angle)

PI = math.pi


def spec(**kw):
    base = dict(dt=3.0, dv_x=0.05, dv_y=0.05, domega=PI / 30, v_max=0.1, omega_max=PI / 30,
                w=0.1, n_stages=5)
    base.update(kw)
    return GridSpec(**base)


def lattice_count(spec):
    """Independent count: scan a generous integer box and apply the cone with exact rationals."""
    kx_max = int(spec.v_max / spec.dv_x) + 2
    ky_max = int(spec.v_max / spec.dv_y) + 2
    kp_max = int(spec.omega_max / spec.domega) + 2
    n = 0
    for kx, ky, kp in itertools.product(range(-kx_max, kx_max + 1), range(-ky_max, ky_max + 1),
                                        range(-kp_max, kp_max + 1)):
        if (math.hypot(kx * spec.dv_x, ky * spec.dv_y) <= spec.v_max * (1 + 1e-12)
                and abs(kp * spec.domega) <= spec.omega_max * (1 + 1e-12)):
            n += 1
    return n


class TestWrap:
    def test_examples(self):
        assert wrap_angle(0.0) == 0.0
        assert wrap_angle(13 * PI / 12) == pytest.approx(-11 * PI / 12, abs=1e-15)
        assert wrap_angle(-PI) == PI

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            wrap_angle(math.inf)
        with pytest.raises(ValueError):
            wrap_angle(math.nan)

    @given(st.floats(-100, 100))
    def test_range_and_congruence(self, phi):
        r = wrap_angle(phi)
        assert -PI < r <= PI
        k = (phi - r) / (2 * PI)
        assert abs(k - round(k)) < 1e-9


class TestGridSpec:
    def test_derived_steps(self):
        s = spec()
        assert s.dx == 0.05 * 3.0 and s.dy == 0.05 * 3.0
        assert s.dphi == PI / 30 * 3.0
        assert s.n_phi == 20

    @pytest.mark.parametrize("field", ["dt", "dv_x", "dv_y", "domega", "v_max", "omega_max"])
    def test_positive_fields(self, field):
        with pytest.raises(GridError):
            spec(**{field: 0.0})
        with pytest.raises(GridError):
            spec(**{field: -1.0})

    def test_negative_weight(self):
        with pytest.raises(GridError):
            spec(w=-0.1)

    def test_heading_grid_must_close(self):
        with pytest.raises(GridError, match="domega ="):
            spec(dt=1.7)

    def test_reference_parameters_close(self):
        for dt in (2.5, 3.0):
            assert spec(dt=dt).n_phi * spec(dt=dt).dphi == pytest.approx(2 * PI, rel=1e-12)

    def test_event_coordinates(self):
        s = spec(origin=(1.0, -2.0, 0.5))
        e = s.event(2, 3, -1, 21)
        assert e.jphi == 1
        assert e.t == 6.0
        assert e.x == 1.0 + 3 * s.dx and e.y == -2.0 - s.dy
        assert e.phi == wrap_angle(0.5 + s.dphi)

    def test_snap_inverts_event(self):
        s = spec(origin=(0.3, 0.1, 0.0))
        for idx in [(0, 0, 0), (5, -3, 7), (-12, 40, 19)]:
            e = s.event(0, *idx)
            assert s.snap(e.x, e.y, e.phi) == idx


class TestControlSet:
    def test_39_controls(self):
        s = spec(v_max=0.1, omega_max=PI / 30)
        ua = build_control_set(s)
        assert len(ua) == 39 == lattice_count(s)

    def test_only_zero(self):
        s = spec(v_max=0.04, omega_max=PI / 40)
        ua = build_control_set(s)
        assert list(ua) == [Control(0, 0, 0)]

    def test_25_controls(self):
        s = spec(v_max=0.05, omega_max=PI / 15)
        assert len(build_control_set(s)) == 25 == lattice_count(s)

    def test_canonical_order_and_symmetry(self):
        ua = build_control_set(spec(v_max=0.2, omega_max=PI / 10))
        cs = list(ua)
        assert cs == sorted(cs)
        assert Control(0, 0, 0) in ua
        for u in cs:
            assert -u in ua

    def test_closed_cone_boundary(self):
        # k*dv == v_max exactly must be admitted
        s = spec(dv_x=0.1, dv_y=0.1, v_max=0.3)
        ua = build_control_set(s)
        assert Control(3, 0, 0) in ua and Control(4, 0, 0) not in ua

    @given(st.integers(1, 6), st.integers(1, 4), st.integers(1, 3))
    def test_lattice_oracle(self, vk, dvk, wk):
        s = spec(dv_x=0.01 * dvk, dv_y=0.01 * dvk, v_max=0.013 * vk * dvk, omega_max=PI / 30 * wk)
        assert len(build_control_set(s)) == lattice_count(s)


class TestCost:
    def test_examples(self):
        assert displacement_cost(2.5, 0.125, 0, 0, 0.3) == pytest.approx(0.00625, rel=1e-15)
        s = spec()
        assert step_cost(Control(0, 0, 0), s) == 0.0
        s2 = spec(w=0.04, v_max=0.2, omega_max=PI / 10)
        assert step_cost(Control(1, 1, 1), s2) == pytest.approx(
            (0.0225 + 0.0225 + 0.04 * (PI / 10) ** 2) / 3, rel=1e-12)

    def test_zero_iff_zero_control(self):
        s = spec(v_max=0.2, omega_max=PI / 10)
        for u in build_control_set(s):
            assert (step_cost(u, s) == 0) == (u == Control(0, 0, 0))

    def test_total_cost_examples(self):
        s = GridSpec(dt=1.0, dv_x=0.1, dv_y=0.1, domega=PI, v_max=0.2, omega_max=PI, w=1.0,
                     n_stages=2)
        traj = [s.event(i, i, 0, 0) for i in range(3)]
        assert total_cost(traj, s) == pytest.approx(0.02, rel=1e-12)
        assert total_cost(traj[:1], s) == 0.0
        assert total_cost([s.event(i, 4, 4, 0) for i in range(3)], s) == 0.0

    def test_total_cost_reports_stage(self):
        s = spec(v_max=0.05)
        traj = [s.event(0, 0, 0, 0), s.event(1, 1, 0, 0), s.event(2, 3, 0, 0)]
        with pytest.raises(InadmissibleStep) as ei:
            total_cost(traj, s)
        assert ei.value.stage == 1

    def test_reversal_invariance(self):
        s = spec(v_max=0.2, omega_max=PI / 10, n_stages=4)
        rng = np.random.default_rng(3)
        ua = list(build_control_set(s))
        e = s.event(0, 0, 0, 0)
        traj = [e]
        for _ in range(4):
            e = apply_control(e, ua[rng.integers(len(ua))], s)
            traj.append(e)
        rev = [s.event(i, ev.jx, ev.jy, ev.jphi) for i, ev in enumerate(reversed(traj))]
        assert total_cost(rev, s) == pytest.approx(total_cost(traj, s), rel=1e-12)


class TestApplyControl:
    def test_examples(self):
        s = spec()
        e = s.event(0, 0, 0, 0)
        assert apply_control(e, Control(0, 0, 0), s).index == (0, 0, 0)
        assert apply_control(e, Control(2, -1, 0), s).index[:2] == (2, -1)

    def test_wrap_across_pi(self):
        s = GridSpec(dt=1.0, dv_x=0.1, dv_y=0.1, domega=PI / 6, v_max=0.1, omega_max=PI / 6,
                     n_stages=1, origin=(0, 0, 11 * PI / 12))
        e = s.event(0, 0, 0, 0)
        f = apply_control(e, Control(0, 0, 1), s)
        assert f.phi == pytest.approx(-11 * PI / 12, abs=1e-12)

    def test_stage_overflow(self):
        s = spec(n_stages=1)
        with pytest.raises(ValueError):
            apply_control(s.event(1, 0, 0, 0), Control(0, 0, 0), s)

    @given(st.integers(-50, 50), st.integers(-50, 50), st.integers(0, 19),
           st.sampled_from(list(build_control_set(spec(v_max=0.2, omega_max=PI / 10)))))
    def test_inverse(self, jx, jy, jp, u):
        s = spec(v_max=0.2, omega_max=PI / 10, n_stages=2)
        e = s.event(0, jx, jy, jp)
        f = apply_control(apply_control(e, u, s), -u, s)
        assert f.index == e.index

    def test_displacement_exact(self):
        s = spec(v_max=0.2, omega_max=PI / 10)
        for u in build_control_set(s):
            e = s.event(0, 0, 0, 0)
            f = apply_control(e, u, s)
            assert f.x - e.x == u.kx * s.dx
            assert f.y - e.y == u.ky * s.dy
