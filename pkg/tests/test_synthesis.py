import numpy as np
import pytest

from skinforge import (Direction, EmsLayout, OptimizerConfig, PlaneWave,
                       SynthesisSpec, current_mismatch, equivalent_currents,
                       ideal_current_phases, ideal_currents, load_layout,
                       mismatch_between, pattern_cut, save_layout,
                       synthesize_per_cell, synthesize_pso, transmitted_field)
from skinforge.aperture import pixel_integral
from skinforge.synthesis import least_squares_scale, prepare_target
from oracles import naive_current_mismatch

PITCH = 3.7e-3
ETA0 = 376.730313668


def _spec(normal_wave, theta_rx=160.0, phi_rx=0.0, p=8, q=8):
    return SynthesisSpec(Direction(theta_rx, phi_rx), normal_wave, p, q, PITCH)


class TestIdealPhases:
    def test_broadside_uniform(self, normal_wave):
        phases = ideal_current_phases(_spec(normal_wave, 180.0))
        np.testing.assert_allclose(phases, 0.0, atol=1e-12)

    def test_steering_step_along_x(self, normal_wave, f26):
        phases = ideal_current_phases(_spec(normal_wave, 160.0))
        steps = np.diff(phases, axis=0)
        expected = -f26.wavenumber * np.sin(np.radians(20.0)) * PITCH
        np.testing.assert_allclose(steps, expected, atol=1e-12)
        assert expected == pytest.approx(-0.6897, abs=5e-4)  # printed value

    def test_antisymmetry_in_u(self, normal_wave):
        fwd = ideal_current_phases(_spec(normal_wave, 160.0, 0.0))
        mirror = ideal_current_phases(_spec(normal_wave, 160.0, 180.0))
        np.testing.assert_allclose(mirror, -fwd, atol=1e-12)

    def test_no_variation_along_y_for_phi0(self, normal_wave):
        phases = ideal_current_phases(_spec(normal_wave, 140.0))
        np.testing.assert_allclose(np.diff(phases, axis=1), 0.0, atol=1e-12)


class TestIdealCurrents:
    def test_broadside_sheet_uniform_and_huygens(self, normal_wave):
        sheet = ideal_currents(_spec(normal_wave, 180.0))
        ref_m = np.broadcast_to(sheet.magnetic[0, 0], sheet.magnetic.shape)
        np.testing.assert_allclose(sheet.magnetic, ref_m, atol=1e-15)
        jm = np.linalg.norm(sheet.magnetic[0, 0])
        je = np.linalg.norm(sheet.electric[0, 0])
        assert jm == pytest.approx(1.0, rel=1e-12)
        assert je * ETA0 == pytest.approx(1.0, rel=1e-12)

    def test_broadside_peak(self, normal_wave, f26):
        spec = _spec(normal_wave, 180.0, p=16, q=16)
        sheet = ideal_currents(spec)
        layout = EmsLayout.uniform(16, 16, PITCH, 1e-3, "ideal")
        cut = pattern_cut(layout, sheet, f26, samples=721)
        peak = cut.theta_deg[np.argmax(cut.power_phi)]
        assert peak == pytest.approx(180.0, abs=0.25)

    def test_steered_peak(self, normal_wave, f26):
        spec = _spec(normal_wave, 160.0, p=20, q=20)
        sheet = ideal_currents(spec)
        layout = EmsLayout.uniform(20, 20, PITCH, 1e-3, "ideal")
        cut = pattern_cut(layout, sheet, f26, samples=721)
        peak = cut.theta_deg[np.argmax(cut.power_phi)]
        assert peak == pytest.approx(160.0, abs=0.5)

    def test_in_phase_at_focus(self, normal_wave, f26):
        # definition of conjugation: every cell's term lands with one phase
        spec = _spec(normal_wave, 140.0, p=6, q=6)
        sheet = ideal_currents(spec)
        rx = spec.receiver
        xs, ys = spec.cell_xy()
        terms = []
        for i in range(6):
            for j in range(6):
                pix = pixel_integral(rx, PITCH, (xs[i], ys[j]), f26)
                terms.append(sheet.magnetic[i, j, 0] * pix)
        angles = np.angle(np.array(terms) / terms[0])
        assert np.max(np.abs(angles)) < 1e-9


class TestMismatch:
    def test_zero_against_ideal(self, normal_wave):
        spec = _spec(normal_wave, 150.0, p=4, q=4)
        ideal = ideal_currents(spec)
        zero = ideal.scaled(0.0)
        norm_sq = float(np.real(np.vdot(ideal.stacked(), ideal.stacked())))
        assert mismatch_between(zero, ideal) == pytest.approx(norm_sq, rel=1e-12)

    def test_perfect_match_is_zero(self, surrogate, normal_wave):
        layout = EmsLayout.uniform(3, 3, PITCH, 1.1e-3, surrogate.table_id)
        sheet = equivalent_currents(layout, surrogate, normal_wave)
        assert mismatch_between(sheet, sheet) == 0.0

    def test_naive_sum_oracle(self, surrogate, normal_wave, rng):
        lo, hi = surrogate.d1_range
        layout = EmsLayout(5, 4, PITCH, rng.uniform(lo, hi, (5, 4)),
                           surrogate.table_id)
        realized = equivalent_currents(layout, surrogate, normal_wave)
        ideal = ideal_currents(_spec(normal_wave, 160.0, p=5, q=4))
        got = current_mismatch(layout, surrogate, normal_wave, ideal)
        ref = naive_current_mismatch(realized, ideal, ETA0)
        assert got == pytest.approx(ref, rel=1e-12)

    def test_shape_mismatch_rejected(self, surrogate, normal_wave):
        layout = EmsLayout.uniform(3, 3, PITCH, 1.1e-3, surrogate.table_id)
        ideal = ideal_currents(_spec(normal_wave, 160.0, p=4, q=4))
        with pytest.raises(ValueError):
            current_mismatch(layout, surrogate, normal_wave, ideal)


class TestPerCell:
    def test_broadside_uniform_best_knot(self, surrogate, normal_wave):
        res = synthesize_per_cell(_spec(normal_wave, 180.0, p=6, q=6), surrogate)
        assert np.ptp(res.layout.d1_m) == 0.0
        # anchor sits at the strongest response; both edges tie at 0.98 and
        # the tie resolves to the smaller radius
        assert res.layout.d1_m[0, 0] == pytest.approx(surrogate.d1_range[0])
        assert res.upsilon == pytest.approx(0.0, abs=1e-18)

    def test_steered_periodicity(self, surrogate, normal_wave, f26):
        # phase gradient wraps every lambda / (pitch * u_rx) ~ 9.11 cells; the
        # assignment is a sawtooth whose resets average that (quasi-)period
        res = synthesize_per_cell(_spec(normal_wave, 160.0, p=60, q=1), surrogate)
        d1_line = res.layout.d1_m[:, 0]
        period = f26.wavelength_m / (PITCH * np.sin(np.radians(20.0)))
        assert period == pytest.approx(9.11, abs=0.01)
        resets = np.nonzero(np.abs(np.diff(d1_line)) > 0.3e-3)[0]
        spacings = np.diff(resets)
        assert set(spacings.tolist()) <= {9, 10}
        assert np.mean(spacings) == pytest.approx(period, abs=0.25)

    def test_global_optimality_vs_random(self, surrogate, normal_wave, rng):
        spec = _spec(normal_wave, 160.0, p=5, q=5)
        res = synthesize_per_cell(spec, surrogate)
        lo, hi = surrogate.d1_range
        for _ in range(1000):
            trial = EmsLayout(5, 5, PITCH, rng.uniform(lo, hi, (5, 5)),
                              surrogate.table_id)
            ups = current_mismatch(trial, surrogate, normal_wave, res.target)
            assert res.upsilon <= ups + 1e-12

    def test_separability(self, surrogate, normal_wave, rng):
        # total mismatch equals the sum of independent per-cell terms
        spec = _spec(normal_wave, 140.0, p=4, q=6)
        prep = prepare_target(spec, surrogate)
        lo, hi = surrogate.d1_range
        layout = EmsLayout(4, 6, PITCH, rng.uniform(lo, hi, (4, 6)),
                           surrogate.table_id)
        total = current_mismatch(layout, surrogate, normal_wave, prep.sheet)
        per_cell = 0.0
        for i in range(4):
            for j in range(6):
                one = EmsLayout(1, 1, PITCH, layout.d1_m[i:i + 1, j:j + 1],
                                surrogate.table_id)
                cell_wave_phase = normal_wave.phase_at(
                    layout.cell_x[i], layout.cell_y[j])
                sheet = equivalent_currents(one, surrogate, normal_wave)
                sheet = sheet.scaled(cell_wave_phase)  # restore cell position phase
                tgt_e = prep.sheet.electric[i:i + 1, j:j + 1]
                tgt_m = prep.sheet.magnetic[i:i + 1, j:j + 1]
                diff_e = ETA0 * (sheet.electric - tgt_e)
                diff_m = sheet.magnetic - tgt_m
                per_cell += float(np.sum(np.abs(diff_e) ** 2
                                         + np.abs(diff_m) ** 2))
        assert total == pytest.approx(per_cell, rel=1e-12)

    def test_argmin_invariant_under_common_scaling(self, surrogate, normal_wave):
        spec = _spec(normal_wave, 160.0, p=6, q=6)
        res = synthesize_per_cell(spec, surrogate)
        prep = prepare_target(spec, surrogate)
        scaled_target = prep.sheet.scaled(3.0)
        from skinforge.synthesis import _percell_argmin
        d1_scaled = _percell_argmin(spec, scaled_target, prep.grid,
                                    prep.j0_e * 3.0, prep.j0_m * 3.0)
        np.testing.assert_array_equal(res.layout.d1_m, d1_scaled)

    def test_tie_breaks_to_smaller_radius(self, surrogate, normal_wave):
        res = synthesize_per_cell(_spec(normal_wave, 180.0, p=2, q=2), surrogate)
        assert res.layout.d1_m[0, 0] == surrogate.d1_range[0]


class TestPso:
    def test_matches_oracle_small(self, surrogate, normal_wave):
        spec = _spec(normal_wave, 160.0, p=4, q=4)
        oracle = synthesize_per_cell(spec, surrogate)
        cfg = OptimizerConfig(swarm_size=30, max_iterations=200,
                              stall_iterations=200, seed=0)
        res = synthesize_pso(spec, surrogate, cfg)
        assert res.upsilon <= 1.001 * oracle.upsilon

    def test_broadside_example_budget(self, surrogate, normal_wave):
        # the broadside oracle mismatch is exactly zero here (the target is
        # anchored at an achievable response), so a pure ratio bound is
        # degenerate; the swarm must still collapse to a near-perfect match
        # within the small budget.  Ratio-based oracle checks run on the
        # steered instances above.
        spec = _spec(normal_wave, 180.0, p=4, q=4)
        oracle = synthesize_per_cell(spec, surrogate)
        assert oracle.upsilon <= 1e-18
        cfg = OptimizerConfig(swarm_size=20, max_iterations=50,
                              stall_iterations=50, seed=0)
        res = synthesize_pso(spec, surrogate, cfg)
        norm_sq = float(np.real(np.vdot(res.target.stacked(),
                                        res.target.stacked())))
        assert res.upsilon <= 1.001 * oracle.upsilon + 0.01 * norm_sq

    def test_trace_monotone(self, surrogate, normal_wave):
        cfg = OptimizerConfig(swarm_size=10, max_iterations=60,
                              stall_iterations=60, seed=3)
        res = synthesize_pso(_spec(normal_wave, 150.0, p=3, q=3), surrogate, cfg)
        assert np.all(np.diff(res.trace) <= 0.0)
        assert res.upsilon == res.trace[-1]
        assert res.upsilon <= res.trace[0]   # never worse than the best initial

    def test_fixed_seed_bit_identical(self, surrogate, normal_wave):
        spec = _spec(normal_wave, 155.0, p=3, q=4)
        cfg = OptimizerConfig(swarm_size=12, max_iterations=40,
                              stall_iterations=40, seed=11)
        a = synthesize_pso(spec, surrogate, cfg)
        b = synthesize_pso(spec, surrogate, cfg)
        np.testing.assert_array_equal(a.layout.d1_m, b.layout.d1_m)
        np.testing.assert_array_equal(a.trace, b.trace)
        assert a.upsilon == b.upsilon

    def test_layout_within_bounds(self, surrogate, normal_wave):
        # any out-of-range particle would raise inside the fitness lookup,
        # so a completed run certifies the clamping invariant
        cfg = OptimizerConfig(swarm_size=15, max_iterations=50,
                              stall_iterations=50, seed=5)
        res = synthesize_pso(_spec(normal_wave, 130.0, p=3, q=3), surrogate, cfg)
        lo, hi = surrogate.d1_range
        assert res.layout.d1_m.min() >= lo and res.layout.d1_m.max() <= hi

    def test_broadside_converges_uniform(self, surrogate, normal_wave):
        cfg = OptimizerConfig(swarm_size=30, max_iterations=300,
                              stall_iterations=300, seed=1)
        res = synthesize_pso(_spec(normal_wave, 180.0, p=3, q=3), surrogate, cfg)
        lo, hi = surrogate.d1_range
        assert np.ptp(res.layout.d1_m) <= 0.02 * (hi - lo)

    def test_stagnation_stops_early(self, surrogate, normal_wave):
        cfg = OptimizerConfig(swarm_size=12, max_iterations=500,
                              stall_iterations=10, seed=2)
        res = synthesize_pso(_spec(normal_wave, 150.0, p=2, q=2), surrogate, cfg)
        assert len(res.trace) < 501

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OptimizerConfig(swarm_size=1)
        with pytest.raises(ValueError):
            OptimizerConfig(inertia=1.5)
        with pytest.raises(ValueError):
            OptimizerConfig(cognitive=0.0)
        with pytest.raises(ValueError):
            OptimizerConfig(max_iterations=0)


class TestScale:
    def test_least_squares_scale_recovers_factor(self, normal_wave):
        ideal = ideal_currents(_spec(normal_wave, 160.0, p=4, q=4))
        scaled = ideal.scaled(0.37 - 0.21j)
        assert least_squares_scale(ideal, scaled) == pytest.approx(0.37 - 0.21j,
                                                                   rel=1e-12)

    def test_broadside_anchor_is_strongest_cell(self, surrogate, normal_wave):
        prep = prepare_target(_spec(normal_wave, 180.0, p=4, q=4), surrogate)
        assert abs(prep.scale) == pytest.approx(surrogate.mag_te.max(), rel=1e-6)


class TestSpecValidation:
    def test_receiver_must_be_transmitted_side(self, normal_wave):
        with pytest.raises(ValueError):
            _spec(normal_wave, 90.0)
        with pytest.raises(ValueError):
            _spec(normal_wave, 45.0)


class TestLayoutJson:
    def test_roundtrip(self, surrogate, normal_wave, tmp_path):
        spec = _spec(normal_wave, 160.0, p=5, q=6)
        res = synthesize_per_cell(spec, surrogate)
        path = tmp_path / "layout.json"
        save_layout(res, spec, path)
        layout, doc = load_layout(path)
        np.testing.assert_array_equal(layout.d1_m, res.layout.d1_m)
        assert doc["p"] == 5 and doc["q"] == 6
        assert doc["spec"]["receiver"]["theta_deg"] == 160.0
        assert doc["upsilon"] == pytest.approx(res.upsilon)
        assert doc["seed"] is None
        assert len(doc["d1_m"]) == 5 and len(doc["d1_m"][0]) == 6  # row-major

    def test_bad_file(self, tmp_path):
        from skinforge import InputFileError
        p = tmp_path / "junk.json"
        p.write_text("{not json")
        with pytest.raises(InputFileError):
            load_layout(p)
        with pytest.raises(InputFileError):
            load_layout(tmp_path / "missing.json")
