"""invnets: structure-first neural networks for inverse problems.

The package derives network structures from the forward physics of two
imaging problems (infrared radiometry and microphone-array acoustics):
closed-form Gaussian inversion nets, transform-domain gain masks,
encoder-decoder chains, unfolded iterative shrinkage, and physics-informed
losses, all running on a built-in reverse-mode tape with interchangeable
compiled/pure-Python kernels.
"""

from invnets.backend import BACKEND, available_backends
from invnets.tensor import (
    ParamSet,
    Tensor,
    conv2d_circular,
    fft,
    fft_imag_part,
    fft_real_part,
    matmul,
    soft_threshold,
)
from invnets.tape import Tape
from invnets.linop import LinearOp, conv1d_matrix, power_iteration
from invnets.bayes import (
    GaussPriors,
    inverse_factorizations,
    map_estimate,
    posterior_covariance,
)
from invnets.rng import CounterRng

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "Tensor",
    "ParamSet",
    "Tape",
    "matmul",
    "conv2d_circular",
    "fft",
    "fft_real_part",
    "fft_imag_part",
    "soft_threshold",
    "LinearOp",
    "conv1d_matrix",
    "power_iteration",
    "GaussPriors",
    "map_estimate",
    "posterior_covariance",
    "inverse_factorizations",
    "CounterRng",
    "__version__",
]
