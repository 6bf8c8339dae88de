"""Tests for strain sweeps, crossing detection and averaged splitting."""

from dataclasses import replace

import numpy as np
import pytest

from nvsim.model import FineStructureParams, StrainVector, \
    build_excited_hamiltonian
from nvsim.linalg import hermitian_eigen
from nvsim.sweep import (SweepError, averaged_splitting, classify_level,
                         detect_crossings, nv2_condition_strain, sweep)

DEFAULTS = FineStructureParams()
DECOUPLED = replace(DEFAULTS, lambda_perp=0.0)


def coarse_sweep(params, lo=0.01, hi=30.0, n=601):
    return sweep(params, np.linspace(lo, hi, n))


class TestClassify:
    def test_populations_sum_to_one(self):
        es = hermitian_eigen(build_excited_hamiltonian(
            DEFAULTS, StrainVector(4.0, 0.0)))
        for k in range(6):
            c = classify_level(es.vectors[:, k])
            assert c.p_sx + c.p_sy + c.p_sz == pytest.approx(1.0)
            assert 0.0 <= c.p_branch_x <= 1.0

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            classify_level(np.ones(6))

    def test_zero_strain_symmetry_tags(self):
        es = hermitian_eigen(build_excited_hamiltonian(
            DECOUPLED, StrainVector()))
        tags = {classify_level(es.vectors[:, k]).symmetry_tag
                for k in range(6)}
        assert tags == {"E1", "E2", "E'x", "E'y", "A1", "A2"}


class TestSweep:
    def test_rejects_bad_grid(self):
        with pytest.raises(SweepError):
            sweep(DEFAULTS, np.array([1.0, 0.5]))

    def test_tracks_are_continuous(self):
        sr = coarse_sweep(DEFAULTS)
        steps = np.abs(np.diff(sr.energies, axis=0))
        # energy slope is bounded by the strain operator norm (1 GHz/GHz)
        assert np.max(steps) < 2.0 * (sr.grid[1] - sr.grid[0])

    def test_tracking_unambiguous_on_fine_grid(self):
        sr = sweep(DEFAULTS, np.linspace(0.01, 20.0, 801))
        assert sr.ambiguous_points == []


class TestCrossings:
    def test_two_avoided_crossings_with_coupling(self):
        sr = coarse_sweep(DEFAULTS, n=1201)
        events = [e for e in detect_crossings(sr, 0.5) if e.avoided]
        assert len(events) == 2
        strains = sorted(e.strain_at_min_gap for e in events)
        assert strains[0] == pytest.approx(7.31, abs=0.05)
        assert strains[1] == pytest.approx(15.50, abs=0.05)
        assert all(e.min_gap > 0.01 for e in events)

    def test_crossings_close_when_decoupled(self):
        sr = coarse_sweep(DECOUPLED, n=1201)
        events = detect_crossings(sr, 0.5)
        assert len(events) >= 2
        assert all(e.min_gap < 1e-6 for e in events)
        assert not any(e.avoided for e in events)

    def test_upper_branch_has_no_crossing(self):
        sr = coarse_sweep(DEFAULTS, n=1201)
        last = sr.characters[-1]
        upper = [k for k in range(6) if last[k].p_branch_x > 0.5]
        assert len(upper) == 3
        for i in range(3):
            for j in range(i + 1, 3):
                gap = np.abs(sr.energies[:, upper[i]]
                             - sr.energies[:, upper[j]])
                assert np.min(gap) > 0.5


class TestAveragedSplitting:
    def test_exact_trace_identity_when_decoupled(self):
        for d in (0.0, 1.0, 7.31, 20.0, 50.0):
            assert averaged_splitting(DECOUPLED, d) == \
                pytest.approx(1.42, abs=1e-9)

    def test_stays_near_d_es_with_coupling(self):
        devs = [abs(averaged_splitting(DEFAULTS, d) - 1.42)
                for d in np.linspace(0.0, 30.0, 121)]
        assert max(devs) < 0.05


class TestRepumpCondition:
    def test_condition_strain(self):
        d = nv2_condition_strain(DEFAULTS)
        assert d == pytest.approx(3.464, abs=0.01)

    def test_no_solution_raises(self):
        with pytest.raises(SweepError):
            nv2_condition_strain(DEFAULTS, window=(50.0, 60.0))
