import math

import numpy as np
import pytest

from chansim.geometry import (
    CavityEnvironment,
    PairGeometry,
    build_linear_array,
    build_planar_array,
    pairwise_geometry,
)
from chansim.greens import (
    SingularityError,
    coherent_block,
    coherent_blocks,
    coherent_longitudinal,
    coherent_transverse,
    dyadic_green,
)
from chansim.numerics import sphere_kernels

F0 = 5e9
LAM = 299_792_458.0 / F0
K0 = 2 * math.pi / LAM
ENV = CavityEnvironment(F0, (400 * LAM) ** 3, 1e7)


def zaxis_pair(R: float) -> PairGeometry:
    return PairGeometry(R, (0.0, 0.0, 1.0))


def oblique_pair(R: float) -> PairGeometry:
    c = (0.3, -0.4, math.sqrt(1 - 0.25))
    return PairGeometry(R, c)


class TestDyadicGreen:
    def test_zaxis_entries(self):
        R = 3.7 * LAM
        kr = K0 * R
        g = dyadic_green(zaxis_pair(R), K0)
        phase = np.exp(-1j * kr) / (4 * math.pi * R)
        # longitudinal entry: isotropic and outer-product brackets summed
        zz = (2j / kr + 2 / kr**2) * phase
        xx = (1 - 1j / kr - 1 / kr**2) * phase
        assert g[2, 2] == pytest.approx(zz, rel=1e-12)
        assert g[0, 0] == pytest.approx(xx, rel=1e-12)
        assert g[1, 1] == pytest.approx(xx, rel=1e-12)
        assert abs(g[0, 1]) == 0.0

    def test_longitudinal_vanishes_far_field(self):
        R = 5000 * LAM
        g = dyadic_green(zaxis_pair(R), K0)
        assert abs(g[2, 2]) < 1e-2 * abs(g[0, 0])

    def test_symmetry_off_axis(self):
        g = dyadic_green(oblique_pair(2.1 * LAM), K0)
        assert np.allclose(g, g.T, rtol=1e-12)

    def test_zero_separation_rejected(self):
        # zero-distance pairs cannot even be constructed ...
        from chansim.geometry import DegeneratePairError, PairTable
        with pytest.raises(DegeneratePairError):
            PairGeometry(0.0, (0.0, 0.0, 1.0))
        # ... and a doctored table still raises at evaluation time
        table = PairTable(np.zeros((1, 1)), np.array([[[0.0, 0.0, 1.0]]]))
        with pytest.raises(SingularityError):
            coherent_blocks(table, ENV)


class TestCoherentBlock:
    def test_zaxis_transverse_entry(self):
        R = 2.6 * LAM
        kr = K0 * R
        blk = coherent_block(zaxis_pair(R), ENV)
        expected = (math.cos(kr) / (4 * math.pi * R)
                    - math.sin(kr) / (4 * math.pi * kr * R)
                    - math.cos(kr) / (4 * math.pi * kr**2 * R))
        assert blk[0, 0] == pytest.approx(ENV.field_scale * expected, rel=1e-12)

    def test_quarter_wave_value(self):
        # at kR = pi/2 the cosine terms die and only -sin/(4 pi k R^2) stays
        kr = math.pi / 2
        R = kr / K0
        blk = coherent_block(zaxis_pair(R), ENV)
        assert blk[0, 0] == pytest.approx(-1.0 / (4 * math.pi * kr * R), rel=1e-12)

    def test_kernel_recomposition(self):
        # independent recomposition from the sin/cos power kernels:
        # xx on axis equals (k/4pi) * x * (s2 - s3 - s4), x = kR
        for r_l in (0.13, 2.6, 47.0):
            R = r_l * LAM
            x = K0 * R
            ks = sphere_kernels(x)
            expected = (K0 / (4 * math.pi)) * x * (ks["s2"] - ks["s3"] - ks["s4"])
            assert coherent_transverse(R, K0) == pytest.approx(expected, rel=1e-10)

    def test_real_part_of_dyadic(self):
        pair = oblique_pair(1.9 * LAM)
        blk = coherent_block(pair, ENV)
        assert np.allclose(blk, ENV.field_scale * np.real(dyadic_green(pair, K0)),
                           rtol=1e-13)

    def test_axis_projection_entry(self):
        # pair along x: the xx entry carries the full outer-product bracket
        pair = PairGeometry(3.3 * LAM, (1.0, 0.0, 0.0))
        blk = coherent_block(pair, ENV)
        R = pair.distance
        expected = coherent_transverse(R, K0) + coherent_longitudinal(R, K0)
        assert blk[0, 0] == pytest.approx(expected, rel=1e-12)

    def test_reciprocity(self):
        pair = oblique_pair(4.4 * LAM)
        swapped = PairGeometry(pair.distance, tuple(-c for c in pair.cosines))
        assert np.array_equal(coherent_block(pair, ENV),
                              coherent_block(swapped, ENV).T)

    def test_far_field_transversality(self):
        R = 2000 * LAM  # kR > 1e3
        pair = oblique_pair(R)
        blk = coherent_block(pair, ENV)
        rhat = np.asarray(pair.cosines)
        longitudinal = np.linalg.norm(blk @ rhat)
        transverse = np.linalg.norm(blk - np.outer(blk @ rhat, rhat))
        assert longitudinal < 1e-2 * transverse

    def test_vectorized_matches_scalar(self):
        tx = build_planar_array(3, 2, 0.4 * LAM)
        rx = build_planar_array(2, 2, 0.4 * LAM, origin=(0.0, 0.0, 5 * LAM))
        table = pairwise_geometry(tx, rx)
        grids = coherent_blocks(table, ENV)
        for m in range(table.shape[0]):
            for n in range(table.shape[1]):
                single = coherent_block(table.pair(m, n), ENV)
                assert np.allclose(grids[:, :, m, n], single, rtol=1e-12)
