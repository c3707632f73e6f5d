"""Infrared forward model: pointwise response, PSF, and full pipeline."""

import math

import mpmath as mp
import numpy as np
import pytest

from conftest import from_np, to_np
from invnets.errors import DomainError, ParameterError
from invnets.forward_models import (
    IRParams,
    PSF,
    gaussian_psf,
    ir_forward,
    ir_phi,
    ir_phi_floor,
    ir_phi_inverse,
)
from invnets.rng import CounterRng
from invnets.tensor import Tensor, conv2d_circular

BASE = dict(
    emissivity=0.5,
    background_temp=300.0,
    attenuation=0.01,
    distance=10.0,
    air_temp=290.0,
    exponent=4.0,
)

# frozen from the 50-digit mpmath evaluation of the response at f = 350
ORACLE_PHI_350 = 319.75511890791218


def mp_phi(f, p):
    """Arbitrary-precision scalar oracle for the emissivity response."""
    with mp.workdps(50):
        e = mp.mpf(p.emissivity)
        tb = mp.mpf(p.background_temp)
        ta = mp.mpf(p.air_temp)
        n = mp.mpf(p.exponent)
        kd = mp.mpf(p.attenuation) * mp.mpf(p.distance)
        bracket = (e * mp.mpf(f) ** n + (1 - e) * tb**n + (mp.e**-kd - 1) * ta) / mp.e**kd
        return float(bracket ** (1 / n))


class TestIRParams:
    def test_validation(self):
        with pytest.raises(ParameterError):
            IRParams(**{**BASE, "emissivity": 0.0})
        with pytest.raises(ParameterError):
            IRParams(**{**BASE, "emissivity": 1.2})
        with pytest.raises(ParameterError):
            IRParams(**{**BASE, "background_temp": -3.0})
        with pytest.raises(ParameterError):
            IRParams(**{**BASE, "attenuation": -0.1})


class TestIrPhi:
    def test_identity_full_emissivity_no_attenuation(self, rng_np):
        p = IRParams(**{**BASE, "emissivity": 1.0, "attenuation": 0.0})
        f = from_np(rng_np.uniform(250.0, 400.0, (5, 5)))
        assert np.array_equal(to_np(ir_phi(f, p)), to_np(f))

    def test_identity_zero_distance(self, rng_np):
        p = IRParams(**{**BASE, "emissivity": 1.0, "distance": 0.0})
        f = from_np(rng_np.uniform(250.0, 400.0, (4, 4)))
        assert np.array_equal(to_np(ir_phi(f, p)), to_np(f))

    def test_scalar_against_high_precision_oracle(self):
        p = IRParams(**BASE)
        got = ir_phi(Tensor.scalar(350.0), p).item()
        assert abs(got - ORACLE_PHI_350) < 1e-10 * ORACLE_PHI_350
        assert abs(got - mp_phi(350.0, p)) < 1e-10 * ORACLE_PHI_350

    def test_monotone_in_temperature(self):
        rng = CounterRng(31)
        p = IRParams(**BASE)
        for _ in range(1000):
            a = 200.0 + 300.0 * rng.uniform()
            b = a + 1e-3 + 100.0 * rng.uniform()
            va = ir_phi(Tensor.scalar(a), p).item()
            vb = ir_phi(Tensor.scalar(b), p).item()
            assert vb > va

    def test_nonpositive_temperature_names_pixel(self):
        p = IRParams(**BASE)
        f = Tensor.from_nested([[300.0, 300.0], [-1.0, 300.0]])
        with pytest.raises(DomainError) as err:
            ir_phi(f, p)
        assert "(1, 0)" in str(err.value)

    def test_negative_bracket_names_pixel(self):
        # huge air-temperature attenuation drives the bracket negative
        p = IRParams(
            emissivity=0.01,
            background_temp=1.0,
            attenuation=5.0,
            distance=10.0,
            air_temp=1e6,
            exponent=4.0,
        )
        with pytest.raises(DomainError) as err:
            ir_phi(Tensor.from_nested([2.0]), p)
        assert "pixel 0" in str(err.value)

    def test_inverse_round_trip(self, rng_np):
        p = IRParams(**BASE)
        f = from_np(rng_np.uniform(260.0, 420.0, (6, 6)))
        back = ir_phi_inverse(ir_phi(f, p), p)
        assert np.max(np.abs(to_np(back) - to_np(f))) < 1e-9

    def test_phi_floor_marks_domain_boundary(self):
        p = IRParams(**BASE)
        floor = ir_phi_floor(p)
        ir_phi_inverse(Tensor.scalar(floor + 1e-9), p)  # in-domain
        if floor > 0:
            with pytest.raises(DomainError):
                ir_phi_inverse(Tensor.scalar(floor * 0.9), p)


class TestGaussianPsf:
    def test_unit_sum(self):
        for sigma in (0.3, 1.0, 4.0):
            psf = gaussian_psf(7, sigma)
            assert abs(sum(psf.kernel.data) - 1.0) <= 1e-12

    def test_tiny_sigma_is_delta(self):
        psf = gaussian_psf(5, 1e-6)
        k = to_np(psf.kernel)
        assert k[2, 2] == 1.0
        assert np.sum(k) - k[2, 2] == 0.0

    def test_centrosymmetric(self):
        k = to_np(gaussian_psf(5, 1.0).kernel)
        assert np.array_equal(k, k[::-1, ::-1])

    def test_even_size_rejected(self):
        with pytest.raises(ParameterError):
            gaussian_psf(4, 1.0)

    def test_psf_type_checks_normalization(self):
        with pytest.raises(ParameterError):
            PSF(Tensor.full((3, 3), 1.0))
        with pytest.raises(ParameterError):
            PSF(Tensor.from_nested([[2.0, -1.0]]))


class TestIrForward:
    def test_identity_configuration(self, rng_np):
        p = IRParams(**{**BASE, "emissivity": 1.0, "attenuation": 0.0})
        psf = gaussian_psf(1, 1.0)  # 1x1 delta
        f = from_np(rng_np.uniform(250.0, 400.0, (6, 6)))
        g = ir_forward(f, p, psf, noise_sd=0.0)
        assert np.array_equal(to_np(g), to_np(f))

    def test_constant_scene(self):
        p = IRParams(**BASE)
        psf = gaussian_psf(5, 1.0)
        f = Tensor.full((8, 8), 330.0)
        g = ir_forward(f, p, psf, noise_sd=0.0)
        want = ir_phi(Tensor.scalar(330.0), p).item()
        assert np.max(np.abs(to_np(g) - want)) < 1e-10

    def test_equals_two_stage_composition(self, rng_np):
        p = IRParams(**BASE)
        psf = gaussian_psf(5, 1.3)
        f = from_np(rng_np.uniform(250.0, 400.0, (8, 8)))
        g = ir_forward(f, p, psf, noise_sd=0.0)
        want = conv2d_circular(ir_phi(f, p), psf.kernel)
        assert np.array_equal(to_np(g), to_np(want))

    def test_noise_seeded_and_deterministic(self, rng_np):
        p = IRParams(**BASE)
        psf = gaussian_psf(3, 1.0)
        f = from_np(rng_np.uniform(250.0, 400.0, (4, 4)))
        a = ir_forward(f, p, psf, noise_sd=1.0, seed=9)
        b = ir_forward(f, p, psf, noise_sd=1.0, seed=9)
        c = ir_forward(f, p, psf, noise_sd=1.0, seed=10)
        assert np.array_equal(to_np(a), to_np(b))
        assert not np.array_equal(to_np(a), to_np(c))
