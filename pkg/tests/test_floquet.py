import math

import numpy as np
import pytest

from latticeband import (
    DegenerateEdgeError,
    InitialCondition,
    InsufficientDataError,
    LatticeSpec,
    NotForbiddenError,
    OutsideAllowedZoneError,
    PeriodicPotential,
    SpectralClass,
    beat_estimate,
    classify_energy,
    effective_consistency_residual,
    effective_potential,
    effective_potential_periodicity_residual,
    floquet_multipliers,
    floquet_solution,
    ic_sweep,
    knot_periodicity_residual,
    knots,
    propagate,
    ratio_periodicity_residual,
    recurrence_residual,
    tail_growth_rate,
)

FREE = PeriodicPotential.free()
P2 = PeriodicPotential.local([1.0, -1.0])
U05 = PeriodicPotential(v=(0.0,), u=(0.5,))
MIXED = PeriodicPotential(v=(1.0, -1.0), u=(0.3, 0.1))
LAT = LatticeSpec()

KAPPA5 = math.log((3.0 + math.sqrt(5.0)) / 2.0)

# One forbidden energy per example potential; MIXED has its gap at (0.98, 3.02).
GAP_CASES = [(FREE, 5.0), (U05, 4.0), (P2, 2.0), (MIXED, 2.0)]


class TestFloquetSolution:
    def test_decaying_branch_rate(self):
        trace = floquet_solution(FREE, LAT, 5.0, "decaying", 100)
        la = trace.log_abs()
        steps = np.diff(la)
        assert np.max(np.abs(steps + KAPPA5)) <= 1e-9

    def test_growing_branch_rate(self):
        trace = floquet_solution(P2, LAT, 2.0, "growing", 100)
        la = trace.log_abs()
        per_period = la[20] - la[18]
        assert per_period == pytest.approx(KAPPA5, rel=1e-10)

    def test_multiplier_relation_over_many_periods(self):
        for pot, energy in GAP_CASES:
            m = pot.m
            trace = floquet_solution(pot, LAT, energy, "decaying", 30 * m)
            lam = abs(floquet_multipliers(pot, LAT, energy).lambda_plus)
            lam = min(lam, 1.0 / lam)
            la = trace.log_abs()
            for n in range(len(la) - m):
                assert abs((la[n + m] - la[n]) - math.log(lam)) <= 1e-8

    def test_satisfies_recurrence(self):
        for pot, energy in GAP_CASES:
            for branch in ("growing", "decaying"):
                trace = floquet_solution(pot, LAT, energy, branch, 25 * pot.m)
                assert recurrence_residual(trace, pot, LAT) <= 1e-10

    def test_allowed_energy_rejected(self):
        with pytest.raises(NotForbiddenError):
            floquet_solution(FREE, LAT, 2.0, "growing", 50)

    def test_edge_energy_rejected(self):
        with pytest.raises(DegenerateEdgeError):
            floquet_solution(FREE, LAT, 4.0, "growing", 50)

    def test_plus_minus_branch_names(self):
        # plus/minus follow the quadratic-formula sign: at E = 5 (D = -3) the
        # plus root is the small one
        t_plus = floquet_solution(FREE, LAT, 5.0, "plus", 20)
        assert t_plus.log_abs()[10] < t_plus.log_abs()[0]
        t_minus = floquet_solution(FREE, LAT, 5.0, "minus", 20)
        assert t_minus.log_abs()[10] > t_minus.log_abs()[0]


class TestKnots:
    def test_period_six_pattern(self):
        trace = propagate(FREE, LAT, 1.0, InitialCondition(0.0, 1.0), 12)
        assert knots(trace).positions == (0.0, 3.0, 6.0, 9.0, 12.0)

    def test_linear_solution_single_knot(self):
        trace = propagate(FREE, LAT, 0.0, InitialCondition(0.0, 1.0), 12)
        assert knots(trace).positions == (0.0,)

    def test_alternating_gap_solution_unit_spacing(self):
        trace = floquet_solution(FREE, LAT, 5.0, "growing", 60)
        positions = knots(trace).positions
        gaps = np.diff(positions)
        assert np.max(np.abs(gaps - 1.0)) <= 1e-9

    def test_interpolated_position_between_sites(self):
        trace = propagate(FREE, LAT, 3.9, InitialCondition(0.0, 1.0), 50)
        for x in knots(trace).positions:
            n = int(x)
            assert n <= x < n + 1


class TestKnotPeriodicity:
    def test_free_gap_solution(self):
        trace = floquet_solution(FREE, LAT, 5.0, "growing", 80)
        assert knot_periodicity_residual(knots(trace), 1) <= 1e-9

    def test_period_two_gap_solution(self):
        trace = floquet_solution(P2, LAT, 2.0, "growing", 80)
        assert knot_periodicity_residual(knots(trace), 2) <= 1e-8

    def test_generic_band_trace_is_aperiodic(self):
        # beating displaces the interpolated zeros from cell to cell
        trace = propagate(FREE, LAT, 3.9, InitialCondition(0.0, 1.0), 200)
        assert knot_periodicity_residual(knots(trace), 1) > 1e-3

    def test_knotless_trace(self):
        trace = floquet_solution(FREE, LAT, -0.5, "growing", 40)
        assert knots(trace).positions == ()
        assert knot_periodicity_residual(knots(trace), 1) == 0.0


class TestRatioPeriodicity:
    def test_free_gap_constant_ratio(self):
        trace = floquet_solution(FREE, LAT, 5.0, "growing", 60)
        assert ratio_periodicity_residual(trace, 1) <= 1e-9

    def test_constant_nonlocal_gap(self):
        # ratio is the constant root of r + 1/r = -4
        trace = floquet_solution(U05, LAT, 4.0, "decaying", 60)
        assert ratio_periodicity_residual(trace, 1) <= 1e-9
        r = -2.0 + math.sqrt(3.0)
        psi = trace.reconstructed()
        assert psi[5] / psi[4] == pytest.approx(r, rel=1e-10)

    def test_period_two_alternating_angles(self):
        trace = floquet_solution(P2, LAT, 2.0, "growing", 80)
        assert ratio_periodicity_residual(trace, 2) <= 1e-8
        from latticeband import ratio_sequence

        phis = ratio_sequence(trace)
        # two distinct angle classes alternate
        assert abs(phis[0] - phis[1]) > 1e-3

    def test_generic_gap_trace_is_aperiodic(self):
        trace = propagate(P2, LAT, 2.0, InitialCondition(1.0, 1.0), 200)
        assert ratio_periodicity_residual(trace, 2) > 1e-6


class TestEffectivePotential:
    def test_constant_nonlocal_gives_constant_w(self):
        trace = floquet_solution(U05, LAT, 4.0, "growing", 60)
        profile = effective_potential(trace, U05, LAT)
        w = profile.w[profile.defined]
        assert np.max(np.abs(w + 2.0)) <= 1e-9

    def test_local_potential_unchanged(self):
        trace = propagate(P2, LAT, 0.3, InitialCondition(1.0, 0.4), 40)
        profile = effective_potential(trace, P2, LAT)
        for n in range(1, 40):
            if profile.defined[n]:
                assert profile.w[n] == P2.v_at(n)

    def test_mixed_periodic_residuals(self):
        trace = floquet_solution(MIXED, LAT, 2.0, "growing", 80)
        profile = effective_potential(trace, MIXED, LAT)
        assert effective_potential_periodicity_residual(profile, 2) <= 1e-8
        assert effective_consistency_residual(profile, trace, LAT) <= 1e-9

    def test_generic_gap_trace_not_periodic(self):
        # mixing the growing and decaying branches spoils ratio periodicity
        trace = propagate(MIXED, LAT, 2.0, InitialCondition(1.0, 1.0), 80)
        profile = effective_potential(trace, MIXED, LAT)
        assert effective_potential_periodicity_residual(profile, 2) > 1e-6

    def test_reduction_preserves_classification(self):
        # the folded local potential sees the same gap at the same energy
        for pot, energy in ((MIXED, 2.0), (U05, 4.0)):
            trace = floquet_solution(pot, LAT, energy, "growing", 40 * pot.m)
            profile = effective_potential(trace, pot, LAT)
            m = pot.m
            start = m  # first full period away from the boundary site
            window = profile.w[start : start + m]
            assert profile.defined[start : start + m].all()
            local = PeriodicPotential.local(window)
            assert classify_energy(local, LAT, energy).kind == SpectralClass.FORBIDDEN

    def test_insufficient_defined_pairs(self):
        trace = floquet_solution(MIXED, LAT, 2.0, "growing", 3)
        profile = effective_potential(trace, MIXED, LAT)
        with pytest.raises(InsufficientDataError):
            effective_potential_periodicity_residual(profile, 2)


class TestIcSweep:
    def test_free_gap_direction(self):
        result = ic_sweep(FREE, LAT, 5.0, 180, 200)
        expected = math.atan2((-3.0 + math.sqrt(5.0)) / 2.0, 1.0) % math.pi
        assert abs(result.alpha_star - expected) <= math.pi / 180.0
        growths = np.array(result.growths)
        best = np.argmin(growths)
        others = np.delete(growths, best)
        assert growths[best] < others.min()  # strict, isolated minimiser

    def test_allowed_zone_flat(self):
        result = ic_sweep(FREE, LAT, 2.0, 36, 200)
        assert max(abs(g) for g in result.growths) <= 1e-6

    def test_period_two_matches_eigendirection(self):
        pair = floquet_multipliers(P2, LAT, 2.0)
        small = (
            pair.dir_plus if abs(pair.lambda_plus) < abs(pair.lambda_minus) else pair.dir_minus
        )
        expected = math.atan2(small[0], small[1]) % math.pi
        result = ic_sweep(P2, LAT, 2.0, 180, 400)
        assert abs(result.alpha_star - expected) <= math.pi / 180.0

    def test_rejects_small_grid(self):
        with pytest.raises(ValueError):
            ic_sweep(FREE, LAT, 5.0, 4, 100)

    def test_generic_growth_matches_kappa(self):
        # away from the special direction the tail grows at kappa per site
        for pot, energy in ((FREE, 5.0), (P2, 2.0)):
            kappa = floquet_multipliers(pot, LAT, energy).kappa_site
            trace = propagate(pot, LAT, energy, InitialCondition(1.0, 1.0), 1000)
            assert abs(tail_growth_rate(trace, pot.m) - kappa) <= 1e-4


class TestBeatEstimate:
    def test_near_upper_edge(self):
        trace = propagate(FREE, LAT, 3.9, InitialCondition(0.0, 1.0), 200)
        est = beat_estimate(trace, FREE, LAT)
        assert len(est.minima_positions) >= 2
        assert est.l_pred == pytest.approx(9.892897111263832, rel=1e-9)
        assert abs(est.l_est - 9.89) <= 0.989

    def test_band_centre_has_no_beats(self):
        trace = propagate(FREE, LAT, 2.0, InitialCondition(0.0, 1.0), 200)
        with pytest.raises(InsufficientDataError):
            beat_estimate(trace, FREE, LAT)

    def test_period_two_beats(self):
        trace = propagate(P2, LAT, 3.1, InitialCondition(0.0, 1.0), 600)
        est = beat_estimate(trace, P2, LAT)
        periods = est.l_est / 2.0
        assert abs(periods - 6.7946) <= 0.15 * 6.7946

    def test_beats_compress_away_from_edge(self):
        lengths = []
        for energy in (3.9, 3.7, 3.5):
            trace = propagate(FREE, LAT, energy, InitialCondition(0.0, 1.0), 400)
            lengths.append(beat_estimate(trace, FREE, LAT).l_est)
        assert lengths[0] > lengths[1] > lengths[2]

    def test_forbidden_energy_rejected(self):
        trace = propagate(FREE, LAT, 5.0, InitialCondition(0.0, 1.0), 200)
        with pytest.raises(OutsideAllowedZoneError):
            beat_estimate(trace, FREE, LAT)
