"""Orthonormal signal transforms used by transform-domain networks.

Two families, both real orthogonal maps of shape-preserving size:

* ``fftrep``: the unitary FFT re-expressed over the reals.  For real input
  the spectrum is conjugate-symmetric, so each conjugate pair (k, -k) is
  stored as (sqrt(2) Re, sqrt(2) Im) at the pair's two positions, and the
  self-conjugate bins (DC, Nyquist, and their 2-D combinations) keep their
  single real value.  This packing is an isometry, which makes the whole
  map orthogonal: adjoint == inverse, and Parseval holds exactly.

* ``haar``: the orthonormal Haar wavelet, one or more levels, with the
  standard quadrant layout in 2-D (four subbands per level).

Transforms apply to a column batch: data of logical shape (P, B) where P
is the flattened signal size.  B = 1 covers single vectors and images.

``pair_slots`` exposes the conjugate-pair structure so a spectral gain
mask can be tied to one real gain per pair.
"""

import math
from array import array

from invnets.backend import k
from invnets.errors import ShapeError

SQRT2 = math.sqrt(2.0)
_rep_cache = {}
_slot_cache = {}


def _pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def check_transform_shape(shape, levels=1):
    if len(shape) not in (1, 2):
        raise ShapeError(f"transforms support 1-D or 2-D signals, got {shape}")
    for e in shape:
        if not _pow2(e):
            raise ShapeError(f"extents must be powers of two, got {shape}")
    max_levels = min(e.bit_length() - 1 for e in shape)
    if not 1 <= levels <= max_levels:
        raise ShapeError(
            f"levels must be in [1, {max_levels}] for shape {shape}, got {levels}"
        )


def _conj_partner(shape, pos):
    if len(shape) == 1:
        (n,) = shape
        return (-pos[0]) % n
    hh, ww = shape
    return ((-pos[0]) % hh) * ww + ((-pos[1]) % ww)


def _positions(shape):
    if len(shape) == 1:
        for i in range(shape[0]):
            yield i, (i,)
    else:
        hh, ww = shape
        for i in range(hh):
            for j in range(ww):
                yield i * ww + j, (i, j)


def _rep_maps(shape):
    """Gather maps realizing the pack/unpack between complex planes and rep."""
    if shape in _rep_cache:
        return _rep_cache[shape]
    p = 1
    for e in shape:
        p *= e
    pack_idx = array("q", [0] * p)
    pack_sc = array("d", [0.0] * p)
    unre_idx = array("q", [0] * p)
    unre_sc = array("d", [0.0] * p)
    unim_idx = array("q", [0] * p)
    unim_sc = array("d", [0.0] * p)
    inv = 1.0 / SQRT2
    for flat, pos in _positions(shape):
        partner = _conj_partner(shape, pos)
        if partner == flat:  # self-conjugate: real coefficient
            pack_idx[flat] = flat
            pack_sc[flat] = 1.0
            unre_idx[flat] = flat
            unre_sc[flat] = 1.0
            unim_idx[flat] = flat
            unim_sc[flat] = 0.0
        elif flat < partner:  # representative holds sqrt(2)*Re
            pack_idx[flat] = flat
            pack_sc[flat] = SQRT2
            unre_idx[flat] = flat
            unre_sc[flat] = inv
            unim_idx[flat] = partner
            unim_sc[flat] = inv
        else:  # partner position holds sqrt(2)*Im of the representative
            pack_idx[flat] = p + partner
            pack_sc[flat] = SQRT2
            unre_idx[flat] = partner
            unre_sc[flat] = inv
            unim_idx[flat] = flat
            unim_sc[flat] = -inv
    maps = (pack_idx, pack_sc, unre_idx, unre_sc, unim_idx, unim_sc)
    _rep_cache[shape] = maps
    return maps


def _fft_cols(re, im, shape, ncol, inverse):
    if len(shape) == 1:
        return k.fft(re, im, shape[0], ncol, ncol, 1, inverse)
    if ncol != 1:
        raise ShapeError("2-D transforms do not support column batching")
    hh, ww = shape
    re, im = k.fft(re, im, ww, hh, 1, ww, inverse)
    return k.fft(re, im, hh, ww, ww, 1, inverse)


def fftrep_forward(data, shape, ncol):
    """Real signal(s) -> real orthonormal Fourier representation."""
    p = len(data) // ncol
    re, im = _fft_cols(data, k.zeros(p * ncol), shape, ncol, False)
    pack_idx, pack_sc = _rep_maps(shape)[:2]
    both = array("d", re)
    both.extend(im)
    return k.gather_scale_cols(both, ncol, pack_idx, pack_sc)


def fftrep_adjoint(data, shape, ncol):
    """Representation -> real signal(s); exact inverse of fftrep_forward."""
    _, _, unre_idx, unre_sc, unim_idx, unim_sc = _rep_maps(shape)
    re = k.gather_scale_cols(data, ncol, unre_idx, unre_sc)
    im = k.gather_scale_cols(data, ncol, unim_idx, unim_sc)
    re, _ = _fft_cols(re, im, shape, ncol, True)
    return re


def haar_forward(data, shape, ncol, levels):
    if len(shape) == 1:
        return k.haar1d_cols(data, shape[0], ncol, levels, False)
    if ncol != 1:
        raise ShapeError("2-D transforms do not support column batching")
    return k.haar2d(data, shape[0], shape[1], levels, False)


def haar_adjoint(data, shape, ncol, levels):
    if len(shape) == 1:
        return k.haar1d_cols(data, shape[0], ncol, levels, True)
    if ncol != 1:
        raise ShapeError("2-D transforms do not support column batching")
    return k.haar2d(data, shape[0], shape[1], levels, True)


def apply_transform(kind, direction, data, shape, ncol, levels):
    """Dispatch for the tape: kind in {fft, haar}, direction in {forward, adjoint}."""
    if kind == "fft":
        fn = fftrep_forward if direction == "forward" else fftrep_adjoint
        return fn(data, shape, ncol)
    if kind == "haar":
        fn = haar_forward if direction == "forward" else haar_adjoint
        return fn(data, shape, ncol, levels)
    raise ShapeError(f"unknown transform kind {kind!r}")


def pair_slots(shape):
    """Conjugate-pair tying map for spectral gain masks.

    Returns ``(slot_of_position, n_slots, rep_position_of_slot)``: every
    coefficient position maps to a gain slot, paired positions share one,
    and ``rep_position_of_slot[s]`` is the position whose initial value
    seeds slot ``s``.
    """
    if shape in _slot_cache:
        return _slot_cache[shape]
    p = 1
    for e in shape:
        p *= e
    slot_of = array("q", [-1] * p)
    reps = []
    for flat, pos in _positions(shape):
        if slot_of[flat] >= 0:
            continue
        partner = _conj_partner(shape, pos)
        slot = len(reps)
        reps.append(flat)
        slot_of[flat] = slot
        slot_of[partner] = slot
    out = (slot_of, len(reps), reps)
    _slot_cache[shape] = out
    return out
