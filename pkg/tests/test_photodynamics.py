"""Tests for transition lines and the 10-level rate model."""

from dataclasses import replace

import numpy as np
import pytest

from nvsim.model import FineStructureParams, StrainVector
from nvsim.photodynamics import (IDX_EXC, IDX_GSZ, N_LEVELS, RateParams,
                                 build_rate_matrix, excitation_spectrum,
                                 lorentzian_peak, polarize, propagate,
                                 rabi_trace, stationary_state,
                                 transition_lines, uniform_ground)

PARAMS = FineStructureParams()
RATES = RateParams()
STRAIN = StrainVector(3.0, 0.0)


def strong_lines(strain=STRAIN):
    return [ln for ln in transition_lines(PARAMS, strain) if not ln.weak]


class TestTransitionLines:
    def test_eighteen_lines(self):
        assert len(transition_lines(PARAMS, STRAIN)) == 18

    def test_strengths_sum_to_one_per_sublevel(self):
        lines = transition_lines(PARAMS, STRAIN)
        for g in ("gSz", "gSx", "gSy"):
            total = sum(ln.strength for ln in lines
                        if ln.ground_sublevel == g)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_six_strong_sz_and_conserving_flags(self):
        lines = transition_lines(PARAMS, STRAIN)
        conserving = [ln for ln in lines if ln.spin_conserving]
        assert len(conserving) == 6
        assert all(ln.strength > 0.25 for ln in conserving)


class TestRateMatrix:
    def test_columns_sum_to_zero(self):
        for kwargs in ({}, {"mw_on": True}, {"green_on": True},
                       {"laser_detuning": 4.0}):
            g = build_rate_matrix(PARAMS, STRAIN, RATES, **kwargs)
            assert np.max(np.abs(g.sum(axis=0))) < 1e-12

    def test_rejects_inverted_isc_ordering(self):
        with pytest.raises(ValueError):
            RateParams(k_isc_z=0.06, k_isc_xy=0.05)

    def test_lorentzian_peak_unit_height(self):
        assert lorentzian_peak(0.0, 0.1) == 1.0
        assert lorentzian_peak(0.05, 0.1) == pytest.approx(0.5)

    def test_propagation_conserves_probability(self):
        g = build_rate_matrix(PARAMS, STRAIN, RATES, green_on=True,
                              mw_on=True)
        pop = propagate(uniform_ground(), g, 5000.0)
        assert pop.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.min(pop) >= -1e-12

    def test_stationary_state_is_stationary(self):
        g = build_rate_matrix(PARAMS, STRAIN, RATES, laser_detuning=4.0,
                              mw_on=True)
        ss = stationary_state(g)
        assert np.max(np.abs(g @ ss)) < 1e-10
        assert ss.sum() == pytest.approx(1.0)


class TestPolarization:
    def test_green_pumping_polarizes_into_sz(self):
        pop = polarize(PARAMS, STRAIN, RATES)
        assert pop[IDX_GSZ] >= 0.8

    def test_spin_blind_rates_leave_uniform(self):
        blind = replace(RATES, k_isc_z=RATES.k_isc_xy, beta_z=1.0 / 3.0,
                        pump_res_max=0.0)
        g = build_rate_matrix(PARAMS, STRAIN, blind, green_on=True)
        pop = propagate(uniform_ground(), g, 200000.0)
        ground = pop[:3] / pop[:3].sum()
        assert np.max(np.abs(ground - 1.0 / 3.0)) < 1e-6


class TestSpectrum:
    def test_peaks_at_line_positions(self):
        lines = strong_lines()
        grid = np.linspace(-8.0, 8.0, 1601)
        spec = excitation_spectrum(PARAMS, STRAIN, RATES, grid, mw_on=True)
        pl = spec[:, 1]
        base = np.median(pl)
        for ln in lines:
            if not (grid[0] < ln.detuning < grid[-1]):
                continue
            k = np.argmin(np.abs(grid - ln.detuning))
            assert pl[k] > 3.0 * base

    def test_weak_pump_linearity(self):
        lines = strong_lines()
        nus = np.unique([ln.detuning for ln in lines])
        full = excitation_spectrum(PARAMS, STRAIN, RATES, nus)[:, 1]
        half_rp = replace(RATES, pump_res_max=RATES.pump_res_max / 32.0)
        half = excitation_spectrum(PARAMS, STRAIN, half_rp, nus)[:, 1]
        quarter_rp = replace(RATES,
                             pump_res_max=RATES.pump_res_max / 64.0)
        quarter = excitation_spectrum(PARAMS, STRAIN, quarter_rp,
                                      nus)[:, 1]
        # below saturation, halving the pump halves every peak
        assert np.allclose(half / quarter, 2.0, rtol=0.02)
        assert np.all(full > half)

    def test_peak_positions_independent_of_rates(self):
        other = replace(RATES, gamma_rad=RATES.gamma_rad * 2.0,
                        k_isc_xy=RATES.k_isc_xy / 2.0)
        grid = np.linspace(3.5, 4.5, 401)
        a = excitation_spectrum(PARAMS, STRAIN, RATES, grid)[:, 1]
        b = excitation_spectrum(PARAMS, STRAIN, other, grid)[:, 1]
        assert abs(grid[np.argmax(a)] - grid[np.argmax(b)]) < \
            2 * (grid[1] - grid[0])


class TestRabi:
    def test_trace_shapes_and_positive_counts(self):
        line = max((ln for ln in strong_lines()
                    if ln.ground_sublevel == "gSz" and ln.spin_conserving),
                   key=lambda ln: ln.strength)
        taus = np.linspace(0.0, 100.0, 11)
        rows = rabi_trace(PARAMS, STRAIN, RATES, 2.0 * np.pi / 100.0,
                          line, taus)
        assert len(rows) == 11
        counts = np.array([c for _, c in rows])
        assert np.all(counts > 0.0)
        # pi pulse empties the initialized sublevel: minimum near tau=50
        assert np.argmin(counts) == 5

    def test_rejects_bad_inputs(self):
        line = strong_lines()[0]
        with pytest.raises(ValueError):
            rabi_trace(PARAMS, STRAIN, RATES, 0.0, line, [0.0, 1.0])
