"""Deterministic counter-based random number generation.

Every stochastic element of the package (noise synthesis, weight
initialization, batch sampling, collocation sampling) draws from this one
generator so that a (config, seed) pair fully determines every emitted
artifact, independent of platform and of any global interpreter state.

Generator definition (SplitMix64, counter mode)
-----------------------------------------------
State is a 64-bit counter initialized to the seed.  Each draw advances the
counter by the odd constant 0x9E3779B97F4A7C15 and returns a mix of it:

    z  = counter (after increment)
    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

All arithmetic is modulo 2**64.  Derived streams:

* ``uniform()``   -- (z >> 11) * 2**-53, a double in [0, 1).
* ``normal()``    -- Box-Muller on consecutive uniforms u1, u2:
  z0 = sqrt(-2 ln(1 - u1)) cos(2 pi u2), z1 = same with sin; values are
  returned in (z0, z1) order.
* ``shuffle()``   -- Fisher-Yates using ``below(n)`` indices, which maps
  a raw draw to [0, n) by multiplication (floor(n * uniform())).

Any implementation reproducing these rules reproduces the package's noise
streams bit for bit.
"""

import math

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


class CounterRng:
    """SplitMix64 stream seeded with a 64-bit integer."""

    __slots__ = ("_state", "_pending_normal")

    def __init__(self, seed):
        self._state = int(seed) & _MASK
        self._pending_normal = None

    def u64(self):
        """Next raw 64-bit draw."""
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self):
        """Double in [0, 1) with 53 random bits."""
        return (self.u64() >> 11) * 2.0 ** -53

    def below(self, n):
        """Integer in [0, n)."""
        return int(n * self.uniform())

    def normal(self):
        """Standard normal draw (Box-Muller, pairwise)."""
        if self._pending_normal is not None:
            z = self._pending_normal
            self._pending_normal = None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))
        self._pending_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, n):
        """List of n standard normal draws."""
        return [self.normal() for _ in range(n)]

    def uniforms(self, n):
        return [self.uniform() for _ in range(n)]

    def shuffle(self, items):
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def split(self):
        """Independent child stream (seeded by one draw)."""
        return CounterRng(self.u64())
