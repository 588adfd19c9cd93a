import math

import numpy as np
import pytest

from latticeband import (
    FiniteOperator,
    IntervalClass,
    LatticeSpec,
    PeriodicPotential,
    ValidationMismatchError,
    classify_interval,
    cross_validate,
    diagram_from_edges,
    find_band_edges,
    sturm_count,
)

FREE = PeriodicPotential.free()
P2 = PeriodicPotential.local([1.0, -1.0])
LAT = LatticeSpec()


def dense_eigenvalues(op):
    J = np.diag(op.diag) + np.diag(op.off, 1) + np.diag(op.off, -1)
    return np.linalg.eigvalsh(J)


class TestFiniteOperator:
    def test_free_chain_entries(self):
        op = FiniteOperator.from_potential(FREE, LAT, 5)
        assert op.diag.tolist() == [2.0] * 5
        assert op.off.tolist() == [-1.0] * 4

    def test_periodic_fill(self):
        pot = PeriodicPotential(v=(1.0, -1.0), u=(0.3, 0.1))
        op = FiniteOperator.from_potential(pot, LAT, 4)
        assert op.diag.tolist() == [3.0, 1.0, 3.0, 1.0]
        assert op.off.tolist() == [-0.7, -0.9, -0.7]


class TestSturmCount:
    def test_free_chain_hand_values(self):
        # eigenvalues are 2 - 2 cos(j pi / 101), j = 1..100
        op = FiniteOperator.from_potential(FREE, LAT, 100)
        assert sturm_count(op, 2.0).count == 50
        assert sturm_count(op, -0.1).count == 0
        assert sturm_count(op, 4.1).count == 100

    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(17)
        for m in (1, 2, 3):
            pot = PeriodicPotential(
                v=tuple(rng.normal(size=m)), u=tuple(rng.uniform(-0.4, 0.4, size=m))
            )
            op = FiniteOperator.from_potential(pot, LAT, 60)
            ev = dense_eigenvalues(op)
            for energy in rng.uniform(-2.0, 6.0, size=8):
                expected = int(np.sum(ev < energy))
                assert sturm_count(op, float(energy)).count == expected

    def test_count_at_exact_eigenvalue(self):
        # a zero pivot is nudged negative, so hitting an eigenvalue exactly
        # still produces a count in range
        op = FiniteOperator.from_potential(FREE, LAT, 3)
        # spectrum: 2 - sqrt(2), 2, 2 + sqrt(2)
        assert sturm_count(op, 2.0).count in (1, 2)

    def test_monotone_in_energy(self):
        op = FiniteOperator.from_potential(P2, LAT, 200)
        counts = [sturm_count(op, e).count for e in np.linspace(-2.0, 6.0, 60)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[0] == 0 and counts[-1] == 200


class TestClassifyInterval:
    def test_gap(self):
        assert classify_interval(P2, LAT, (1.05, 2.95)) == IntervalClass.GAP

    def test_band(self):
        assert classify_interval(FREE, LAT, (0.5, 3.5)) == IntervalClass.BAND

    def test_mixed_straddles_edge(self):
        assert classify_interval(P2, LAT, (0.5, 2.0)) == IntervalClass.MIXED

    def test_edge_state_budget(self):
        # no gap chunk may hold more than two size-independent states
        for n in (2000, 4000):
            op = FiniteOperator.from_potential(P2, LAT, n)
            inside = sturm_count(op, 2.95).count - sturm_count(op, 1.05).count
            assert inside <= 2

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            classify_interval(P2, LAT, (1.0, 2.0), n1=2000, n2=1000)
        with pytest.raises(ValueError):
            classify_interval(P2, LAT, (1.0, 2.0), n1=1001, n2=2000)


class TestCrossValidate:
    def test_free_diagram_passes(self):
        diagram = find_band_edges(FREE, LAT, -1.0, 5.0)
        report = cross_validate(diagram, FREE, LAT)
        assert report.all_passed
        verdicts = [(c.expected, c.verdict) for c in report.checks]
        assert ("Gap", "Gap") in verdicts and ("Band", "Band") in verdicts

    def test_period_two_diagram_passes(self):
        diagram = find_band_edges(P2, LAT, -2.0, 6.0)
        report = cross_validate(diagram, P2, LAT)
        assert report.all_passed
        assert len(report.checks) == 5

    def test_corrupted_edge_is_named(self):
        claimed = [2.0 - math.sqrt(5.0), 1.5, 3.0, 2.0 + math.sqrt(5.0)]
        bad = diagram_from_edges(P2, LAT, -2.0, 6.0, claimed)
        with pytest.raises(ValidationMismatchError) as err:
            cross_validate(bad, P2, LAT)
        failing = [c for c in err.value.report.checks if not c.passed]
        assert len(failing) == 1
        check = failing[0]
        assert check.lo == pytest.approx(1.05, abs=1e-6)
        assert check.hi == pytest.approx(1.45, abs=1e-6)
        assert check.expected == "Band" and check.verdict == "Gap"

    def test_rejects_nonpositive_margin(self):
        diagram = find_band_edges(FREE, LAT, -1.0, 5.0)
        with pytest.raises(ValueError):
            cross_validate(diagram, FREE, LAT, margin=0.0)


class TestCountingFunctionAgreement:
    def test_edges_match_count_plateaus(self):
        # the normalised counting function reaches each gap plateau within
        # 2/N of the discriminant edge
        cases = [
            (FREE, -1.0, 5.0, {0.0: 0.0, 4.0: 1.0}),
            (P2, -2.0, 6.0, None),
        ]
        for pot, lo, hi, plateaus in cases:
            m = pot.m
            n = 2000 * m
            op = FiniteOperator.from_potential(pot, LAT, n)
            diagram = find_band_edges(pot, LAT, lo, hi)
            if plateaus is None:
                # period-2: plateaus at fractions 0, 1/2, 1 in edge order
                edges = diagram.edge_energies()
                plateaus = {edges[0]: 0.0, edges[1]: 0.5, edges[2]: 0.5, edges[3]: 1.0}
            for edge, fill in plateaus.items():
                delta = 2.0 / n
                below = sturm_count(op, edge - delta).count
                above = sturm_count(op, edge + delta).count
                target = fill * n
                # the plateau level is crossed (or touched, up to wall states)
                # inside the +-2/N window around the edge
                assert below - 2 <= target <= above + 2
