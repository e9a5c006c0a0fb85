import math

import numpy as np
import pytest

from chansim.channel import ShapeError
from chansim.geometry import CavityEnvironment, build_linear_array, pairwise_geometry
from chansim.moments import channel_moment_tables
from chansim.radiation import (
    DegeneratePowerError,
    average_radiated_power,
    directivity_gain,
    radiation_intensity,
)

F0 = 5e9
LAM = 299_792_458.0 / F0
ENV = CavityEnvironment(F0, (400 * LAM) ** 3, 1.6e7)
QUIET = CavityEnvironment(F0, (400 * LAM) ** 3, 1e-9)  # negligible diffuse field


def table_for(n_tx, n_rx, d=3.0):
    tx = build_linear_array(n_tx, 0.4 * LAM)
    rx = build_linear_array(n_rx, 0.4 * LAM, origin=(0.0, 0.0, d * LAM))
    return pairwise_geometry(tx, rx)


class TestIntensity:
    def test_single_pair_identity_coupling(self):
        table = table_for(1, 1)
        tabs = channel_moment_tables(table, ENV)
        mean = tabs.coherent[0, 0, 0, 0] + tabs.nlos_mean[0, 0, 0, 0]
        expected = mean**2 + tabs.variance[0, 0, 0, 0]
        assert radiation_intensity(table, ENV, np.eye(1)) == pytest.approx(
            expected, rel=1e-12)

    def test_half_identity_scales_by_quarter(self):
        table = table_for(1, 1)
        u1 = radiation_intensity(table, ENV, np.eye(1))
        u2 = radiation_intensity(table, ENV, 0.5 * np.eye(1))
        assert u2 == pytest.approx(0.25 * u1, rel=1e-12)

    def test_rectangular_fixture_against_brute_force(self):
        # N_r = 1, N_s = 2: expand the quadratic form by explicit loops
        table = table_for(2, 1)
        tabs = channel_moment_tables(table, ENV)
        mean = tabs.coherent[0, 0] + tabs.nlos_mean[0, 0]
        second = mean**2 + tabs.variance[0, 0]
        d = [sum(second[m, n] for n in range(2)) for m in range(1)]
        C = np.array([[0.7]])
        brute = 0.0
        for m in range(1):
            for n in range(1):
                brute += sum(np.conj(C[k, m]) * d[k] * C[k, n] for k in range(1))
        assert radiation_intensity(table, ENV, C) == pytest.approx(
            float(np.real(brute)), rel=1e-12)

    def test_square_fixture_against_brute_force(self):
        table = table_for(3, 3)
        tabs = channel_moment_tables(table, ENV)
        mean = tabs.coherent[0, 0] + tabs.nlos_mean[0, 0]
        second = mean**2 + tabs.variance[0, 0]
        dvals = second.sum(axis=1)
        rng = np.random.default_rng(2)
        C = rng.normal(size=(3, 3))
        brute = 0.0
        for m in range(3):
            for n in range(3):
                brute += sum(C[k, m] * dvals[k] * C[k, n] for k in range(3))
        assert radiation_intensity(table, ENV, C) == pytest.approx(brute, rel=1e-12)

    def test_shape_mismatch(self):
        table = table_for(2, 1)
        with pytest.raises(ShapeError):
            radiation_intensity(table, ENV, np.eye(2))


class TestAveragePower:
    def test_no_diffuse_field_means_equal(self):
        table = table_for(2, 2)
        u = radiation_intensity(table, QUIET, np.eye(2))
        p = average_radiated_power(table, QUIET, np.eye(2))
        assert u == pytest.approx(p, rel=1e-12)

    def test_intensity_dominates_with_identity_coupling(self):
        table = table_for(2, 2)
        u = radiation_intensity(table, ENV, np.eye(2))
        p = average_radiated_power(table, ENV, np.eye(2))
        assert u >= p

    def test_difference_is_summed_variance(self):
        table = table_for(3, 2)
        tabs = channel_moment_tables(table, ENV)
        u = radiation_intensity(table, ENV, np.eye(2))
        p = average_radiated_power(table, ENV, np.eye(2))
        assert u - p == pytest.approx(tabs.variance[0, 0].sum(), rel=1e-12)


class TestDirectivity:
    def test_unit_ratio(self):
        rep = directivity_gain(2.0, 2.0)
        assert rep.gain == pytest.approx(4 * math.pi, rel=1e-14)
        assert rep.gain == rep.directivity

    def test_quiet_environment_gain(self):
        table = table_for(2, 2)
        u = radiation_intensity(table, QUIET, np.eye(2))
        p = average_radiated_power(table, QUIET, np.eye(2))
        rep = directivity_gain(u, p)
        assert rep.gain == pytest.approx(4 * math.pi, rel=1e-9)

    def test_multipath_gain_exceeds_isotropic(self):
        table = table_for(2, 2)
        u = radiation_intensity(table, ENV, np.eye(2))
        p = average_radiated_power(table, ENV, np.eye(2))
        assert directivity_gain(u, p).gain >= 4 * math.pi

    def test_degenerate_power(self):
        with pytest.raises(DegeneratePowerError):
            directivity_gain(1.0, 0.0)


class TestReportHelper:
    def test_combined_report(self):
        from chansim.radiation import radiation_report
        table = table_for(2, 2)
        C = 0.5 * np.eye(2)
        rep = radiation_report(table, ENV, C)
        assert rep.intensity == pytest.approx(
            radiation_intensity(table, ENV, C), rel=1e-14)
        assert rep.ohmic_loss == 0.0
        assert np.array_equal(rep.coupling, C)
        assert rep.gain == pytest.approx(
            4 * math.pi * rep.intensity / rep.average_power, rel=1e-14)
