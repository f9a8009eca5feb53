# -----------------------------------------------------------------------------
# Copyright (c) 2024 The epiwarn developers.
#
# This file is part of epiwarn.
#
# epiwarn is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software
# Foundation, either version 3 of the License, or (at your option) any later
# version.
#
# epiwarn is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR
# A PARTICULAR PURPOSE. See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# epiwarn. If not, see <https://www.gnu.org/licenses/>.
# -----------------------------------------------------------------------------
"""
Small-state deterministic random number generation.

The simulator draws all of its initialization randomness from `Pcg32`,
the PCG-XSH-RR generator with 64-bit state and 32-bit output. A seed
$\\omega$ is expanded into the generator's state and stream with
SplitMix64, so any 64-bit integer is a usable seed and the resulting
sequence is reproducible in any language that implements the two
published algorithms.
"""

from __future__ import annotations

from typing import List, Sequence

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1
GOLDEN = 0x9E3779B97F4A7C15
PCG_MULT = 6364136223846793005


def mix64(z: int) -> int:
    """SplitMix64 output function applied to `z + GOLDEN`.

    Arguments:
        z: Any integer; reduced modulo $2^{64}$.

    Returns:
        Mixed 64-bit value.
    """
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Hash-combine a master seed with integer coordinates.

    Used to give every (value index, seed index) run of a sweep its own
    seed without storing it.

    Example:
        ```python
        derive_seed(2024, 3, 17)
        ```

    Arguments:
        master: Master seed.
        parts: Non-negative integer coordinates.

    Returns:
        Derived 64-bit seed.
    """
    x = mix64(master & MASK64)
    for p in parts:
        x = mix64(x ^ mix64(p & MASK64))
    return x


class Pcg32:
    """PCG-XSH-RR 64/32 generator.

    Attributes:
        state (int): 64-bit generator state.
        inc (int): Odd stream increment.
    """

    def __init__(self, seed: int):
        """Seed the generator from a 64-bit integer.

        Two consecutive SplitMix64 outputs become the initial state and
        the stream selector, then the standard PCG seeding sequence runs.

        Arguments:
            seed: Seed $\\omega$.
        """
        s0 = mix64(seed & MASK64)
        s1 = mix64((seed + GOLDEN) & MASK64)
        self.state = 0
        self.inc = ((s1 << 1) | 1) & MASK64
        self.next_u32()
        self.state = (self.state + s0) & MASK64
        self.next_u32()

    def next_u32(self) -> int:
        """Advance and return the next 32-bit output."""
        old = self.state
        self.state = (old * PCG_MULT + self.inc) & MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & MASK32
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) \
            & MASK32

    def randbelow(self, n: int) -> int:
        """Unbiased integer in `[0, n)` by rejection of the short tail.

        Raises:
            ValueError: if `n` is not in `[1, 2^32]`.
        """
        if n < 1 or n > (1 << 32):
            raise ValueError(f'bound out of range: {n}')
        threshold = ((1 << 32) - n) % n
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % n

    def random(self) -> float:
        """Float in `[0, 1)` with 53 random bits (two outputs)."""
        a = self.next_u32() >> 5
        b = self.next_u32() >> 6
        return (a * 67108864 + b) / 9007199254740992.0

    def uniform(self, low: float, high: float) -> float:
        """Float in `[low, high]`; equals `low` when the bounds coincide."""
        return low + (high - low) * self.random()

    def categorical(self, probs: Sequence[float]) -> int:
        """Index drawn with the given probabilities.

        The last index absorbs any rounding slack in the cumulative sum.
        """
        u, acc = self.random(), 0.0
        for i, p in enumerate(probs[:-1]):
            acc += p
            if u < acc:
                return i
        return len(probs) - 1

    def sample_distinct(self, n: int, k: int) -> List[int]:
        """Draw `k` distinct integers from `[0, n)`, in draw order.

        Sparse Fisher-Yates: exactly `k` bounded draws, no rejection
        of repeated values.

        Raises:
            ValueError: if `k > n`.
        """
        if k > n:
            raise ValueError(f'cannot draw {k} distinct values from {n}')
        swapped, out = {}, []
        for j in range(k):
            r = j + self.randbelow(n - j)
            out.append(swapped.get(r, r))
            swapped[r] = swapped.get(j, j)
        return out
