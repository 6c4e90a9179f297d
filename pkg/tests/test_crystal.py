import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonogap.crystal import (
    NU_CAP,
    BandGap,
    Layer,
    NoBandGapError,
    ObjectiveKind,
    Polarization,
    UnitCell,
    cell_transfer_matrix,
    dispersion_curve,
    first_band_gap,
    half_trace,
    lame_from_e_nu,
    layer_transfer_matrix,
    objective,
    objective_model,
    transit_time,
    two_layer_cell,
    two_layer_half_trace,
    wave_speed,
)
from phonogap.sampling import ParameterDef, ParameterSpace, canonical_space, lhs_sample, map_to_space
from phonogap.sobol import ModelEvaluationError

from oracles import brute_force_first_gap, layer_matrix_oracle

REFERENCE_CELL = two_layer_cell(1000.0, 2.0, 2.0, 0.2, 0.2)

layer_strategy = st.builds(
    Layer,
    h_hat=st.floats(min_value=0.05, max_value=1.0),
    rho_hat=st.floats(min_value=1e-2, max_value=1e3),
    e_hat=st.floats(min_value=1e-2, max_value=1e4),
    nu=st.floats(min_value=0.0, max_value=NU_CAP),
)
omega_strategy = st.floats(min_value=1e-3, max_value=60.0)
pol_strategy = st.sampled_from([Polarization.S, Polarization.P])


class TestElasticity:
    def test_lame_zero_poisson(self):
        assert lame_from_e_nu(1.0, 0.0) == (0.0, 0.5)

    def test_lame_generic(self):
        lam, mu = lame_from_e_nu(1.0, 0.2)
        assert lam == pytest.approx(0.2778, abs=5e-5)
        assert mu == pytest.approx(0.4167, abs=5e-5)

    def test_lame_near_cap(self):
        _, mu = lame_from_e_nu(1000.0, 0.463)
        assert mu == pytest.approx(1000.0 / 2.926, rel=1e-12)

    def test_lame_rejects_singular(self):
        with pytest.raises(ValueError):
            lame_from_e_nu(1.0, 0.5)
        with pytest.raises(ValueError):
            lame_from_e_nu(-1.0, 0.2)

    def test_reference_wave_speeds(self):
        ref = Layer(1.0, 1.0, 1.0, 0.0)
        assert wave_speed(ref, Polarization.S) == pytest.approx(math.sqrt(0.5))
        assert wave_speed(ref, Polarization.P) == pytest.approx(1.0)

    def test_p_speed_generic(self):
        layer = Layer(1.0, 2.0, 1000.0, 0.2)
        assert wave_speed(layer, Polarization.P) == pytest.approx(23.57, abs=0.005)

    def test_layer_validation(self):
        with pytest.raises(ValueError):
            Layer(0.0, 1.0, 1.0, 0.1)
        with pytest.raises(ValueError, match="singular"):
            Layer(0.5, 1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            Layer(0.5, 1.0, 1.0, 0.48)


class TestUnitCell:
    def test_thicknesses_normalized_exactly(self):
        cell = UnitCell((Layer(3.0, 1.0, 1.0, 0.1), Layer(5.0, 4.0, 9.0, 0.2)))
        assert math.fsum(l.h_hat for l in cell.layers) == 1.0
        assert cell.layers[0].h_hat == pytest.approx(0.375)

    def test_reference_layer_enforced(self):
        with pytest.raises(ValueError, match="reference"):
            UnitCell((Layer(0.5, 2.0, 1.0, 0.1), Layer(0.5, 1.0, 1.0, 0.1)))

    def test_from_dimensional(self):
        cell = UnitCell.from_dimensional(
            heights=[0.02, 0.04],
            densities=[800.0, 1600.0],
            youngs_moduli=[2e9, 2e12],
            poisson_ratios=[0.2, 0.2],
        )
        l1, l2 = cell.layers
        assert (l1.rho_hat, l1.e_hat) == (1.0, 1.0)
        assert l2.rho_hat == pytest.approx(2.0)
        assert l2.e_hat == pytest.approx(1000.0)
        assert l2.h_hat == pytest.approx(2.0 / 3.0)

    @settings(max_examples=25, deadline=None)
    @given(
        e_ratio=st.floats(min_value=1.0, max_value=1e4),
        rho_ratio=st.floats(min_value=1.0, max_value=1e3),
        h_ratio=st.floats(min_value=0.11, max_value=9.0),
        scale_a=st.integers(min_value=-8, max_value=8),
        scale_b=st.integers(min_value=-8, max_value=8),
    )
    def test_scale_invariance(self, e_ratio, rho_ratio, h_ratio, scale_a, scale_b):
        # power-of-two reference scales keep the arithmetic exact, so the
        # nondimensional layers must match bit for bit
        cells = []
        for k in (scale_a, scale_b):
            s = 2.0**k
            cells.append(
                UnitCell.from_dimensional(
                    heights=[s, s * h_ratio],
                    densities=[s, s * rho_ratio],
                    youngs_moduli=[s, s * e_ratio],
                    poisson_ratios=[0.1, 0.3],
                )
            )
        assert cells[0] == cells[1]

    def test_json_round_trip(self):
        again = UnitCell.from_json(REFERENCE_CELL.to_json())
        assert again == REFERENCE_CELL


class TestTransferMatrices:
    @settings(max_examples=60, deadline=None)
    @given(layer=layer_strategy, omega=omega_strategy, pol=pol_strategy)
    def test_matches_state_matrix_construction(self, layer, omega, pol):
        fast = layer_transfer_matrix(layer, omega, pol)
        slow = layer_matrix_oracle(layer, omega, pol)
        np.testing.assert_allclose(fast, slow, rtol=0, atol=1e-12 * max(1.0, np.abs(slow).max()))

    @settings(max_examples=60, deadline=None)
    @given(layer=layer_strategy, omega=omega_strategy, pol=pol_strategy)
    def test_unimodular(self, layer, omega, pol):
        t = layer_transfer_matrix(layer, omega, pol)
        assert abs(np.linalg.det(t) - 1.0) < 1e-10

    def test_half_transit_gives_trace_minus_two(self):
        layer = Layer(1.0, 1.0, 1.0, 0.25)
        omega = math.pi * wave_speed(layer, Polarization.S) / layer.h_hat
        t = layer_transfer_matrix(layer, omega, Polarization.S)
        assert t[0, 0] + t[1, 1] == pytest.approx(-2.0, abs=1e-12)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            layer_transfer_matrix(Layer(1.0, 1.0, 1.0, 0.1), 0.0, Polarization.S)

    def test_single_layer_cell_matches_layer(self):
        cell = UnitCell((Layer(1.0, 1.0, 1.0, 0.3),))
        np.testing.assert_array_equal(
            cell_transfer_matrix(cell, 2.0, Polarization.P),
            layer_transfer_matrix(cell.layers[0], 2.0, Polarization.P),
        )

    def test_two_half_layers_compose_to_full_layer(self):
        half = Layer(0.5, 1.0, 1.0, 0.2)
        full = Layer(1.0, 1.0, 1.0, 0.2)
        cell = UnitCell((half, half))
        for omega in (0.3, 1.0, 4.7):
            np.testing.assert_allclose(
                cell_transfer_matrix(cell, omega, Polarization.S),
                layer_transfer_matrix(full, omega, Polarization.S),
                atol=1e-10,
            )

    def test_reference_cell_long_wavelength(self):
        t = cell_transfer_matrix(REFERENCE_CELL, 0.1, Polarization.S)
        assert abs(np.linalg.det(t) - 1.0) < 1e-9
        assert abs(0.5 * (t[0, 0] + t[1, 1])) <= 1.0

    @settings(max_examples=40, deadline=None)
    @given(
        layers=st.lists(layer_strategy, min_size=2, max_size=4),
        omega=omega_strategy,
        pol=pol_strategy,
    )
    def test_cell_unimodular(self, layers, omega, pol):
        first = layers[0]
        layers[0] = Layer(first.h_hat, 1.0, 1.0, first.nu)
        cell = UnitCell(tuple(layers))
        t = cell_transfer_matrix(cell, omega, pol)
        assert abs(np.linalg.det(t) - 1.0) < 1e-9


class TestHalfTrace:
    def test_limit_at_zero_frequency(self):
        assert half_trace(REFERENCE_CELL, 1e-4, Polarization.S) == pytest.approx(1.0, abs=1e-6)

    def test_long_wavelength_quadratic(self):
        d3 = 1.0 - half_trace(REFERENCE_CELL, 1e-3, Polarization.S)
        d4 = 1.0 - half_trace(REFERENCE_CELL, 1e-4, Polarization.S)
        assert d3 / d4 == pytest.approx(100.0, rel=0.01)

    @settings(max_examples=80, deadline=None)
    @given(
        e=st.floats(min_value=0.1, max_value=1e4),
        rho=st.floats(min_value=0.1, max_value=1e3),
        h=st.floats(min_value=0.11, max_value=9.0),
        nu1=st.floats(min_value=0.0, max_value=NU_CAP),
        nu2=st.floats(min_value=0.0, max_value=NU_CAP),
        omega=omega_strategy,
        pol=pol_strategy,
    )
    def test_closed_form_matches_matrix_product(self, e, rho, h, nu1, nu2, omega, pol):
        cell = two_layer_cell(e, rho, h, nu1, nu2)
        closed = two_layer_half_trace(e, rho, h, nu1, nu2, omega, pol)
        product = half_trace(cell, omega, pol)
        assert closed == pytest.approx(product, abs=1e-10 * max(1.0, abs(product)))

    def test_equal_layers_reduce_to_cosine(self):
        c = wave_speed(Layer(1.0, 1.0, 1.0, 0.2), Polarization.S)
        for omega in (0.7, 2.9, 11.0):
            assert two_layer_half_trace(1.0, 1.0, 1.0, 0.2, 0.2, omega, Polarization.S) == (
                pytest.approx(math.cos(omega / c), abs=1e-12)
            )

    def test_impedance_inversion_symmetry(self):
        # (e2, rho2) -> (1/rho2, 1/e2) keeps both transit phases but maps
        # the impedance ratio z to 1/z, which (z + 1/z)/2 cannot see
        for omega in (0.4, 1.9, 6.3):
            a = two_layer_half_trace(1000.0, 2.0, 2.0, 0.2, 0.2, omega, Polarization.S)
            b = two_layer_half_trace(1.0 / 2.0, 1.0 / 1000.0, 2.0, 0.2, 0.2, omega, Polarization.S)
            assert a == pytest.approx(b, abs=1e-10)

    def test_homogeneous_never_exceeds_one(self):
        cell = UnitCell((Layer(0.4, 1.0, 1.0, 0.3), Layer(0.6, 1.0, 1.0, 0.3)))
        omegas = np.linspace(0.05, 40.0, 4000)
        values = np.array([half_trace(cell, w, Polarization.P) for w in omegas])
        assert np.max(np.abs(values)) <= 1.0 + 1e-12


class TestDispersionCurve:
    def test_homogeneous_has_no_gap_points(self):
        cell = UnitCell((Layer(0.5, 1.0, 1.0, 0.1), Layer(0.5, 1.0, 1.0, 0.1)))
        points = dispersion_curve(cell, 30.0, 800, Polarization.S)
        assert not any(p.in_gap for p in points)

    def test_flags_and_wavenumbers_consistent(self):
        points = dispersion_curve(REFERENCE_CELL, 12.0, 600, Polarization.S)
        for p in points:
            assert p.in_gap == (abs(p.half_trace) > 1.0)
            if p.in_gap:
                assert p.k_hat_h is None
            else:
                assert 0.0 <= p.k_hat_h <= math.pi
                assert math.cos(p.k_hat_h) == pytest.approx(
                    min(1.0, max(-1.0, p.half_trace)), abs=1e-12
                )

    def test_s_gap_sits_below_p_gap(self):
        s_points = dispersion_curve(REFERENCE_CELL, 12.0, 2000, Polarization.S)
        p_points = dispersion_curve(REFERENCE_CELL, 12.0, 2000, Polarization.P)
        first_s = next(p.omega_hat for p in s_points if p.in_gap)
        first_p = next(p.omega_hat for p in p_points if p.in_gap)
        assert first_s < first_p

    def test_wavenumber_continuity_on_first_branch(self):
        gap = first_band_gap(REFERENCE_CELL, Polarization.S)
        points = dispersion_curve(REFERENCE_CELL, gap.start, 2000, Polarization.S)
        ks = [p.k_hat_h for p in points if not p.in_gap]
        assert max(abs(b - a) for a, b in zip(ks, ks[1:])) < math.pi / 10

    def test_validation(self):
        with pytest.raises(ValueError):
            dispersion_curve(REFERENCE_CELL, -1.0, 100, Polarization.S)
        with pytest.raises(ValueError):
            dispersion_curve(REFERENCE_CELL, 1.0, 1, Polarization.S)


class TestFirstBandGap:
    def test_homogeneous_returns_none(self):
        cell = UnitCell((Layer(0.5, 1.0, 1.0, 0.2), Layer(0.5, 1.0, 1.0, 0.2)))
        assert first_band_gap(cell, Polarization.S) is None
        assert first_band_gap(cell, Polarization.P) is None

    def test_reference_cell_matches_oracle(self):
        for pol in (Polarization.S, Polarization.P):
            gap = first_band_gap(REFERENCE_CELL, pol)
            start, end = brute_force_first_gap(REFERENCE_CELL, pol)
            assert gap.start == pytest.approx(start, abs=1e-6)
            assert gap.end == pytest.approx(end, abs=1e-6)

    def test_edge_residuals_are_tiny(self):
        gap = first_band_gap(REFERENCE_CELL, Polarization.S, edge_tol=1e-9)
        for edge in (gap.start, gap.end):
            assert abs(abs(half_trace(REFERENCE_CELL, edge, Polarization.S)) - 1.0) < 1e-8

    def test_interior_is_forbidden(self):
        gap = first_band_gap(REFERENCE_CELL, Polarization.S)
        for w in np.linspace(gap.start + 1e-3, gap.end - 1e-3, 50):
            assert abs(half_trace(REFERENCE_CELL, w, Polarization.S)) > 1.0

    def test_narrow_passband_ends_gap_at_strong_contrast(self):
        cell = two_layer_cell(9122.7, 373.48, 0.502, 0.037, 0.334)
        gap = first_band_gap(cell, Polarization.S)
        start, end = brute_force_first_gap(cell, Polarization.S)
        assert gap.start == pytest.approx(start, abs=1e-6)
        assert gap.end == pytest.approx(end, abs=1e-6)

    def test_density_sweep_lowers_gap_start(self):
        starts = []
        for rho in np.logspace(0.0, 3.0, 10):
            cell = two_layer_cell(1000.0, rho, 2.0, 0.2, 0.2)
            starts.append(first_band_gap(cell, Polarization.S).start)
        assert all(b < a for a, b in zip(starts, starts[1:]))

    def test_bandgap_type_validation(self):
        with pytest.raises(ValueError):
            BandGap(start=2.0, end=1.0)
        gap = BandGap(start=1.0, end=3.5)
        assert gap.width == 2.5


class TestObjective:
    def test_equal_layers_have_no_gap(self):
        with pytest.raises(NoBandGapError) as err:
            objective([1.0, 1.0, 1.0, 0.25, 0.25], "SS")
        assert err.value.params == (1.0, 1.0, 1.0, 0.25, 0.25)

    def test_start_below_p_start(self):
        params = [1000.0, 2.0, 2.0, 0.2, 0.2]
        assert objective(params, ObjectiveKind.SS) < objective(params, ObjectiveKind.SP)

    def test_width_is_end_minus_start(self):
        params = [1000.0, 2.0, 2.0, 0.2, 0.2]
        gap = first_band_gap(REFERENCE_CELL, Polarization.S)
        assert objective(params, "WS") == pytest.approx(gap.width)

    def test_random_points_match_oracle(self):
        samples = map_to_space(lhs_sample(5, 20, 17).original, canonical_space())
        for row in samples:
            cell = two_layer_cell(*row)
            start, end = brute_force_first_gap(cell, Polarization.S)
            assert objective(row, "SS") == pytest.approx(start, abs=1e-6)
        for row in samples[:5]:
            cell = two_layer_cell(*row)
            start, end = brute_force_first_gap(cell, Polarization.S)
            assert objective(row, "WS") == pytest.approx(end - start, abs=1e-6)

    def test_objective_model_reports_failures(self):
        degenerate = ParameterSpace(
            (
                ParameterDef("E2/E1", 1.0 - 1e-9, 1.0 + 1e-9),
                ParameterDef("rho2/rho1", 1.0 - 1e-9, 1.0 + 1e-9),
                ParameterDef("h2/h1", 0.999, 1.001),
                ParameterDef("nu1", 0.25, 0.2500001),
                ParameterDef("nu2", 0.25, 0.2500001),
            )
        )
        model = objective_model("SS", degenerate)
        with pytest.raises(ModelEvaluationError) as err:
            model(lhs_sample(5, 8, 0).original)
        assert err.value.point[0] == pytest.approx(1.0, abs=1e-6)

    def test_pure_function_of_inputs(self):
        params = [316.0, 31.6, 1.7, 0.11, 0.31]
        assert objective(params, "SP") == objective(params, "SP")
