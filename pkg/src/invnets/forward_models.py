"""Infrared radiometric imaging forward model.

A thermal scene f (absolute temperatures, Kelvin) is first distorted
pointwise by the emissivity/environment response

    phi(f) = [ (e f^n + (1-e) Tb^n + (exp(-k d) - 1) Ta) / exp(k d) ]^(1/n)

with emissivity e, background temperature Tb, attenuation k, camera
distance d, air temperature Ta and radiometric exponent n; the optics and
thermal diffusion then blur phi(f) with a point spread function, and the
camera adds noise:

    g = psf * phi(f) + noise.

With e = 1 and k = 0 (or d = 0) the pointwise map is the identity.  The
formula is implemented verbatim, including the linear (not n-th power) Ta
term and the exp(k d) denominator.
"""

import math
from array import array
from dataclasses import dataclass

from invnets.errors import DomainError, ParameterError, ShapeError
from invnets.rng import CounterRng
from invnets.tensor import Tensor, conv2d_circular


@dataclass(frozen=True)
class IRParams:
    """Emissivity-model parameters; temperatures in Kelvin, distance in m."""

    emissivity: float
    background_temp: float
    attenuation: float
    distance: float
    air_temp: float
    exponent: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.emissivity <= 1.0:
            raise ParameterError(f"emissivity must be in (0, 1], got {self.emissivity}")
        if self.background_temp <= 0.0 or self.air_temp <= 0.0:
            raise ParameterError("temperatures must be positive")
        if self.attenuation < 0.0 or self.distance < 0.0:
            raise ParameterError("attenuation and distance must be nonnegative")
        if self.exponent <= 0.0:
            raise ParameterError(f"exponent must be positive, got {self.exponent}")


@dataclass(frozen=True)
class PSF:
    """Nonnegative convolution kernel normalized to unit sum."""

    kernel: Tensor
    sigma: float | None = None

    def __post_init__(self):
        if self.kernel.ndim != 2:
            raise ShapeError("PSF kernel must be 2-D")
        total = 0.0
        for v in self.kernel.data:
            if v < 0.0:
                raise ParameterError("PSF entries must be nonnegative")
            total += v
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"PSF must sum to 1 (got {total!r})")


def gaussian_psf(size, sigma):
    """Centered sampled Gaussian kernel of odd extent, normalized to sum 1."""
    size = int(size)
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"PSF size must be odd and positive, got {size}")
    if sigma <= 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    c = size // 2
    data = array("d", bytes(8 * size * size))
    total = 0.0
    for i in range(size):
        for j in range(size):
            v = math.exp(-((i - c) ** 2 + (j - c) ** 2) / (2.0 * sigma * sigma))
            data[i * size + j] = v
            total += v
    for i in range(size * size):
        data[i] /= total
    return PSF(Tensor((size, size), data), sigma)


def _phi_terms(p):
    decay = math.exp(-p.attenuation * p.distance)
    # constant part of the bracket: (1-e) Tb^n + (exp(-kd) - 1) Ta
    const = (1.0 - p.emissivity) * p.background_temp ** p.exponent
    const += (decay - 1.0) * p.air_temp
    return const, 1.0 / decay  # denominator exp(k d)


def _pixel_name(shape, flat):
    if len(shape) == 2:
        return f"({flat // shape[1]}, {flat % shape[1]})"
    return str(flat)


def ir_phi(f, p):
    """Pointwise emissivity/environment response applied to a temperature map."""
    const, denom = _phi_terms(p)
    inv_n = 1.0 / p.exponent
    out = array("d", f.data)
    for i, v in enumerate(out):
        if v <= 0.0:
            raise DomainError(
                f"temperature must be positive, pixel {_pixel_name(f.shape, i)} is {v}"
            )
        bracket = (p.emissivity * v ** p.exponent + const) / denom
        if bracket < 0.0:
            raise DomainError(
                f"emissivity response undefined (negative radiance) at pixel "
                f"{_pixel_name(f.shape, i)}: bracket={bracket}"
            )
        out[i] = bracket ** inv_n
    return Tensor(f.shape, out)


def ir_phi_inverse(y, p):
    """Pointwise inverse of ir_phi: recovers f from phi(f)."""
    const, denom = _phi_terms(p)
    inv_n = 1.0 / p.exponent
    out = array("d", y.data)
    for i, v in enumerate(out):
        bracket = (v ** p.exponent * denom - const) / p.emissivity
        if bracket < 0.0:
            raise DomainError(
                f"inverse emissivity response undefined at pixel "
                f"{_pixel_name(y.shape, i)}: bracket={bracket}"
            )
        out[i] = bracket ** inv_n
    return Tensor(y.shape, out)


def ir_phi_floor(p):
    """Smallest phi value whose pointwise inverse stays in-domain."""
    const, denom = _phi_terms(p)
    if const <= 0.0:
        return 0.0
    return (const / denom) ** (1.0 / p.exponent)


def ir_forward(f, p, psf, noise_sd=0.0, seed=0):
    """Full forward model: blur of the pointwise response plus camera noise.

    noise_sd = 0 gives the exact deterministic two-stage composition; any
    other value adds i.i.d. Gaussian noise from the seeded stream.
    """
    if noise_sd < 0.0:
        raise ParameterError(f"noise_sd must be nonnegative, got {noise_sd}")
    g = conv2d_circular(ir_phi(f, p), psf.kernel)
    if noise_sd == 0.0:
        return g
    rng = CounterRng(seed)
    data = array("d", g.data)
    for i in range(len(data)):
        data[i] += noise_sd * rng.normal()
    return Tensor(g.shape, data)
