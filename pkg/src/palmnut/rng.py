"""SplitMix64 streams and Box-Muller normals.

The generator is fully specified so that phantoms, masks and noise can be
reproduced bit-for-bit in any language:

* state advances by ``0x9E3779B97F4A7C15`` (mod 2**64) per draw;
* output mixing is the standard SplitMix64 finalizer;
* uniforms are ``(z >> 11) * 2**-53`` in ``[0, 1)``;
* normals come in Box-Muller pairs ``(r cos t, r sin t)`` with
  ``r = sqrt(-2 log(1 - u0))`` and ``t = 2 pi u1``;
* complex normals take real and imaginary parts from consecutive normals;
* named streams seed with ``seed XOR h(label)`` where ``h`` folds the UTF-8
  bytes as ``h = h * 1099511628211 + byte (mod 2**64)`` from ``h = 0``.
"""
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = np.uint64(int(seed) & _MASK)

    def next_uint64(self, n):
        """Return the next ``n`` outputs as a uint64 array."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = self.state + steps * GOLDEN
            self.state = np.uint64((int(self.state) + n * int(GOLDEN)) & _MASK)
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, n):
        return (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n):
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        t = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(t)
        out[1::2] = r * np.sin(t)
        return out[:n]

    def complex_normal(self, shape):
        """Complex array whose real and imaginary parts are independent N(0, 1)."""
        n = int(np.prod(shape))
        g = self.normal(2 * n)
        return (g[0::2] + 1j * g[1::2]).reshape(shape)


def stream(seed, label):
    """Independent stream for a named purpose derived from one user seed."""
    h = 0
    for ch in label.encode():
        h = (h * 1099511628211 + ch) & _MASK
    return SplitMix64((int(seed) ^ h) & _MASK)


def derive_seed(seed, label):
    """A 64-bit integer seed for a named sub-purpose of ``seed``."""
    return int(stream(seed, label).next_uint64(1)[0])
