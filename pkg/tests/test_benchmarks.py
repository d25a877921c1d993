import numpy as np
import pytest

from qsphnet.exceptions import ConfigurationError, ShapeError, UndefinedLossError
from qsphnet.qkernel import ClassicalKernelWeights, QuantumKernelModel, model_stencil
from qsphnet.sph import KernelSpec, build_neighbors, corrected_stencil, plain_stencil
from qsphnet.benchmarks import (
    AdvectionSpec,
    VortexFieldSpec,
    VortexParams,
    advect_step,
    advection_particles,
    advection_velocity,
    default_vortex_field,
    error_metrics,
    field_grid,
    initial_scalar,
    run_period,
    total_field,
    vortex_component,
)


def reference_vortex(p, x, y, t):
    """Independent re-implementation of the single-vortex formula."""
    import math

    r = math.hypot(x - p.center_x, y - p.center_y)
    theta = math.atan2(y - p.center_y, x - p.center_x)
    return (
        p.amplitude
        * math.exp(-(r**2) / (2 * p.sigma**2))
        * math.sin(p.omega * t + p.wavenumber * r + p.azimuthal_mode * theta)
        * (1 + p.modulation_depth * math.cos(p.modulation_freq * theta))
        * math.tanh(r / p.sigma)
    )


class TestVortexField:
    def test_zero_at_center(self):
        p = VortexFieldSpec().vortices[0]
        assert vortex_component(p, p.center_x, p.center_y, 0.0) == 0.0

    def test_no_azimuthal_modulation_when_depth_zero(self):
        p = VortexParams(0.5, 0.5, 1.0, 0.2, 1.0, 10.0, 4, 0.0, 2.0)
        q = VortexParams(0.5, 0.5, 1.0, 0.2, 1.0, 10.0, 4, 0.0, 99.0)
        xs, ys = np.linspace(0, 1, 13), np.linspace(0, 1, 13)
        assert np.allclose(
            vortex_component(p, xs, ys, 0.3), vortex_component(q, xs, ys, 0.3)
        )

    def test_component_against_reference_implementation(self):
        spec = VortexFieldSpec()
        rng = np.random.default_rng(1)
        for p in spec.vortices:
            for _ in range(30):
                x, y, t = rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 2)
                got = float(vortex_component(p, x, y, t))
                assert got == pytest.approx(reference_vortex(p, x, y, t), abs=1e-14)

    def test_default_parameter_tuples(self):
        v1, v2, v3 = VortexFieldSpec().vortices
        assert (v1.center_x, v1.center_y, v1.amplitude) == (0.4, 0.6, 1.2)
        assert (v1.sigma, v1.omega, v1.wavenumber) == (0.25, 1.5, 15.0)
        assert (v1.azimuthal_mode, v1.modulation_depth, v1.modulation_freq) == (5, 0.3, 2.0)
        assert (v2.center_x, v2.azimuthal_mode, v2.modulation_freq) == (0.6, 3, 2.5)
        assert (v3.sigma, v3.azimuthal_mode, v3.modulation_depth) == (0.35, 7, 0.2)

    def test_bounded_strictly_inside_unit_interval(self):
        spec = default_vortex_field()
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, 10000)
        y = rng.uniform(0, 1, 10000)
        z = total_field(spec, x, y, 0.0)
        assert np.all(np.abs(z) < 1.0)

    def test_zero_amplitudes_give_zero_field(self):
        quiet = [
            VortexParams(v.center_x, v.center_y, 0.0, v.sigma, v.omega,
                         v.wavenumber, v.azimuthal_mode, v.modulation_depth,
                         v.modulation_freq)
            for v in VortexFieldSpec().vortices
        ]
        spec = VortexFieldSpec(vortices=tuple(quiet), fine_amp=0.0, bg_amp=0.0)
        x = np.linspace(0, 1, 50)
        assert np.max(np.abs(total_field(spec, x, x, 0.7))) == 0.0

    def test_fixed_seed_is_bit_identical(self):
        a = default_vortex_field(seed=5)
        b = default_vortex_field(seed=5)
        x = np.linspace(0, 1, 40)
        assert np.array_equal(total_field(a, x, x, 0.2), total_field(b, x, x, 0.2))
        c = default_vortex_field(seed=6)
        assert not np.array_equal(total_field(a, x, x, 0.2), total_field(c, x, x, 0.2))

    def test_field_grid_shape(self):
        X, z = field_grid(default_vortex_field(), 32)
        assert X.shape == (1024, 2)
        assert z.shape == (1024,)

    def test_fine_structure_wavenumbers(self):
        kx, ky = VortexFieldSpec().fine_wavenumbers()
        assert kx.tolist() == [25, 30, 35, 40, 45]
        assert ky.tolist() == [18, 21, 24, 27, 30]


class TestVelocityField:
    def test_zero_at_rotation_center(self):
        spec = AdvectionSpec()
        u, v = advection_velocity(spec, 0.5, 0.5, 0.3)
        assert (u, v) == (0.0, 0.0)

    def test_value_at_quarter_radius(self):
        spec = AdvectionSpec()
        u, v = advection_velocity(spec, 0.75, 0.5, 0.0)
        assert u == pytest.approx(0.0, abs=1e-14)
        assert v == pytest.approx(-np.pi, rel=1e-14)

    def test_modulation_sign_flips_at_half_period(self):
        spec = AdvectionSpec()
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, y = rng.uniform(0, 1, 2)
            r = np.hypot(x - 0.5, y - 0.5)
            g = (1 - (4 * r) ** 6) / (1 + (4 * r) ** 6)
            u, v = advection_velocity(spec, x, y, spec.period / 2)
            u_t = np.hypot(u, v)
            assert u_t == pytest.approx(abs(4 * np.pi * r * (1 + g)), rel=1e-12)

    def test_divergence_free_numerically(self):
        spec = AdvectionSpec()
        rng = np.random.default_rng(11)
        eps = 1e-5
        for _ in range(100):
            x, y, t = rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98), rng.uniform(0, 1)
            du = (advection_velocity(spec, x + eps, y, t)[0]
                  - advection_velocity(spec, x - eps, y, t)[0]) / (2 * eps)
            dv = (advection_velocity(spec, x, y + eps, t)[1]
                  - advection_velocity(spec, x, y - eps, t)[1]) / (2 * eps)
            assert abs(du + dv) < 1e-6


class TestInitialScalar:
    def test_peak_at_center(self):
        spec = AdvectionSpec()
        assert initial_scalar(spec, 0.3, 0.5) == pytest.approx(1.0)

    def test_zero_at_support_edge(self):
        spec = AdvectionSpec()
        assert initial_scalar(spec, 0.5, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_zero_outside(self):
        spec = AdvectionSpec()
        assert initial_scalar(spec, 0.9, 0.9) == 0.0

    def test_c1_at_edge(self):
        spec = AdvectionSpec()
        eps = 1e-6
        inner = initial_scalar(spec, 0.5 - eps, 0.5)
        assert inner < 1e-10  # value -> 0
        slope = (initial_scalar(spec, 0.5, 0.5) - initial_scalar(spec, 0.5 - eps, 0.5)) / eps
        assert abs(slope) < 1e-4  # radial derivative -> 0


class TestAdvection:
    def test_zero_field_stays_zero(self):
        spec = AdvectionSpec(spacing=0.05, dt=1e-3)
        ps = advection_particles(spec)
        ps.values[:] = 0.0
        nl = build_neighbors(ps)
        st = corrected_stencil(ps, KernelSpec(h=ps.h), nl)
        out = advect_step(ps, st, spec, 0.0)
        assert np.max(np.abs(out)) == 0.0

    def test_zero_velocity_keeps_field(self):
        spec = AdvectionSpec(spacing=0.05, dt=1e-3)
        ps = advection_particles(spec)
        nl = build_neighbors(ps)
        st = plain_stencil(ps, KernelSpec(h=ps.h), nl)
        # at t where cos term equals... velocity never vanishes globally, so
        # emulate by zeroing the stencil weights instead
        st.wx[:] = 0.0
        st.wy[:] = 0.0
        out = advect_step(ps, st, spec, 0.1)
        assert np.array_equal(out, ps.values)

    @staticmethod
    def _one_step_divergence_error(spacing):
        """Max |discrete - analytic| flux divergence over smooth interior."""
        spec = AdvectionSpec(spacing=spacing, dt=1e-4)
        ps = advection_particles(spec)
        nl = build_neighbors(ps)
        st = corrected_stencil(ps, KernelSpec(h=ps.h), nl)
        out = advect_step(ps, st, spec, 0.0)
        x, y = ps.positions[:, 0], ps.positions[:, 1]
        eps = 1e-6

        def flux(xx, yy):
            u, v = advection_velocity(spec, xx, yy, 0.0)
            p = initial_scalar(spec, xx, yy)
            return u * p, v * p

        dfx = (flux(x + eps, y)[0] - flux(x - eps, y)[0]) / (2 * eps)
        dfy = (flux(x, y + eps)[1] - flux(x, y - eps)[1]) / (2 * eps)
        expect = ps.values - spec.dt * (dfx + dfy)
        # keep clear of the bump's support-edge curvature kink
        r_hat = 5 * np.hypot(x - 0.3, y - 0.5)
        smooth = ps.interior_mask & ((r_hat < 0.8) | (r_hat > 1.2))
        return np.max(np.abs(out - expect)[smooth]) / spec.dt

    def test_one_step_flux_divergence_is_second_order(self):
        # the discrete flux derivative converges at O(spacing^2) to the
        # analytic -div(u psi) computed by fine central differences
        # (measured errors: 6.46 at 0.04, 1.99 at 0.02, 0.51 at 0.01)
        mid = self._one_step_divergence_error(0.04)
        fine = self._one_step_divergence_error(0.02)
        finest = self._one_step_divergence_error(0.01)
        assert fine < mid / 2.5
        assert finest < fine / 2.5

    def test_snapshot_times_and_shapes(self):
        spec = AdvectionSpec(spacing=0.05, dt=1e-3, snapshot_times=(0.0, 0.05, 0.1))
        ps = advection_particles(spec)
        nl = build_neighbors(ps)
        st = corrected_stencil(ps, KernelSpec(h=ps.h), nl)
        run = run_period(spec, st, ps, t_end=0.1)
        assert set(run.snapshots) == {0.0, 0.05, 0.1}
        assert np.array_equal(run.snapshots[0.0], run.initial_values)
        assert run.max_abs <= 1.2

    def test_quantum_substitution_advection_identity(self):
        # classical plain stencil vs the same weights through the model path
        spec = AdvectionSpec(spacing=0.05, dt=1e-3, snapshot_times=(0.0, 0.05))
        ps = advection_particles(spec)
        nl = build_neighbors(ps)
        kernel = KernelSpec(h=ps.h)
        classical = run_period(spec, plain_stencil(ps, kernel, nl), ps.copy(), t_end=0.05)
        model = QuantumKernelModel(grad_model=ClassicalKernelWeights(kernel, "grad"))
        quantum = run_period(spec, model_stencil(model, ps, nl), ps.copy(), t_end=0.05)
        for ts in classical.snapshots:
            assert np.max(np.abs(classical.snapshots[ts] - quantum.snapshots[ts])) < 1e-10

    def test_dt_must_divide_period(self):
        with pytest.raises(ConfigurationError):
            AdvectionSpec(dt=3e-4)


class TestErrorMetrics:
    def test_zero_for_equal(self):
        ref = np.array([1.0, 2.0, -1.0])
        m = error_metrics(ref.copy(), ref)
        assert m["l2_rel"] == 0.0
        assert m["linf_rel"] == 0.0

    def test_homogeneity(self):
        rng = np.random.default_rng(2)
        ref = rng.normal(size=200)
        m = error_metrics(1.1 * ref, ref)
        assert m["l2_rel"] == pytest.approx(0.1, rel=1e-12)

    def test_matches_fsum_oracle(self):
        import math

        rng = np.random.default_rng(3)
        pred = rng.normal(size=500)
        ref = rng.normal(size=500)
        m = error_metrics(pred, ref)
        num = math.sqrt(math.fsum((p - r) ** 2 for p, r in zip(pred, ref)))
        den = math.sqrt(math.fsum(r * r for r in ref))
        assert m["l2_rel"] == pytest.approx(num / den, rel=1e-12)

    def test_mask_restricts_norms(self):
        pred = np.array([1.0, 5.0])
        ref = np.array([1.0, 1.0])
        mask = np.array([True, False])
        assert error_metrics(pred, ref, mask)["l2_rel"] == 0.0

    def test_zero_reference_rejected(self):
        with pytest.raises(UndefinedLossError):
            error_metrics(np.ones(3), np.zeros(3))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            error_metrics(np.ones(3), np.ones(4))
