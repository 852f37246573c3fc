"""Bitstring basis, conserved-magnetization sectors and subsystem embedding.

Conventions
-----------
* Sites are 1-indexed.  Site ``i`` is stored in bit ``i - 1`` of an integer
  word; a set bit means spin up (sigma^z = +1).
* A charge sector is labelled by its up-spin count ``n_up``; the physical
  magnetization is ``2 * n_up - L``.
* Inside a sector, configurations are ordered by ascending integer value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np

from . import kernels
from .errors import ParameterError

MAX_SITES = 24

_SPIN_CHARS = {"↑": 1, "u": 1, "U": 1, "1": 1, "↓": 0, "d": 0, "D": 0, "0": 0}


@dataclass(frozen=True, eq=False)
class ChargeSector:
    """All configurations of ``L`` spins with exactly ``n_up`` up spins."""

    L: int
    n_up: int
    states: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def charge(self) -> int:
        return 2 * self.n_up - self.L

    def rank(self, configs):
        """Intra-sector index of each configuration (array or scalar).

        Raises ``ParameterError`` if a configuration is not in the sector.
        """
        configs = np.asarray(configs, dtype=np.int64)
        idx = np.searchsorted(self.states, configs)
        ok = idx < self.dimension
        ok[ok] = self.states[idx[ok]] == configs[ok]
        if not np.all(ok):
            raise ParameterError(f"configuration(s) not in sector L={self.L}, n_up={self.n_up}")
        return idx if idx.ndim else int(idx)

    def __repr__(self):
        return f"ChargeSector(L={self.L}, n_up={self.n_up}, dimension={self.dimension})"


@lru_cache(maxsize=256)
def enumerate_sector(L: int, n_up: int) -> ChargeSector:
    if not 0 <= L <= MAX_SITES:
        raise ParameterError(f"L={L} outside [0, {MAX_SITES}]")
    if not 0 <= n_up <= L:
        raise ParameterError(f"n_up={n_up} outside [0, {L}]")
    states = np.asarray(kernels.sector_states(L, n_up), dtype=np.int64)
    states.setflags(write=False)
    assert len(states) == comb(L, n_up)
    return ChargeSector(L, n_up, states)


def all_sectors(L: int) -> list[ChargeSector]:
    return [enumerate_sector(L, n) for n in range(L + 1)]


def popcount(c):
    """Number of up spins; int64 so that charge arithmetic cannot wrap."""
    out = np.bitwise_count(np.asarray(c, dtype=np.int64)).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def charge_of(c, L: int):
    """Magnetization ``sum_i sigma^z_i`` of configuration(s) ``c``."""
    out = 2 * popcount(c) - L
    return int(out) if np.ndim(out) == 0 else out


def parse_spins(text: str) -> int:
    """Word for a spin string such as ``"↑↓↓"`` or ``"udd"``; leftmost = lowest site."""
    word = 0
    for k, ch in enumerate(text):
        try:
            word |= _SPIN_CHARS[ch] << k
        except KeyError:
            raise ParameterError(f"unknown spin symbol {ch!r} in {text!r}") from None
    return word


def format_spins(word: int, n: int) -> str:
    return "".join("↑" if (word >> k) & 1 else "↓" for k in range(n))


@dataclass(frozen=True)
class Geometry:
    """Chain of ``L`` sites with a contiguous open-system window.

    ``qos_sites`` is the inclusive 1-indexed interval ``(first, last)``; the
    bath is the complement, in ascending site order.
    """

    L: int
    qos_sites: tuple[int, int]

    def __post_init__(self):
        first, last = self.qos_sites
        object.__setattr__(self, "qos_sites", (int(first), int(last)))
        if not 2 <= self.L <= MAX_SITES:
            raise ParameterError(f"L={self.L} outside [2, {MAX_SITES}]")
        if not 1 <= first <= last <= self.L:
            raise ParameterError(f"qos_sites {self.qos_sites} not a nonempty interval of [1, {self.L}]")

    @cached_property
    def qos(self) -> tuple[int, ...]:
        return tuple(range(self.qos_sites[0], self.qos_sites[1] + 1))

    @cached_property
    def bath(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.L + 1) if i not in self.qos)

    @property
    def L_s(self) -> int:
        return len(self.qos)

    @property
    def L_b(self) -> int:
        return len(self.bath)

    @cached_property
    def qos_bits(self) -> np.ndarray:
        return np.array(self.qos, dtype=np.int64) - 1

    @cached_property
    def bath_bits(self) -> np.ndarray:
        return np.array(self.bath, dtype=np.int64) - 1


def embed(qos_config, bath_config, g: Geometry):
    """Full-chain configuration(s) from QOS and bath factor configuration(s)."""
    a = kernels.deposit_bits(np.atleast_1d(np.asarray(qos_config, dtype=np.int64)), g.qos_bits)
    b = kernels.deposit_bits(np.atleast_1d(np.asarray(bath_config, dtype=np.int64)), g.bath_bits)
    out = a | b
    return int(out[0]) if np.ndim(qos_config) == 0 and np.ndim(bath_config) == 0 else out


def split(config, g: Geometry):
    """Inverse of :func:`embed`: ``(qos_config, bath_config)``."""
    c = np.atleast_1d(np.asarray(config, dtype=np.int64))
    a = kernels.extract_bits(c, g.qos_bits)
    b = kernels.extract_bits(c, g.bath_bits)
    if np.ndim(config) == 0:
        return int(a[0]), int(b[0])
    return a, b


def embed_table(g: Geometry, qos_configs=None, bath_configs=None) -> np.ndarray:
    """Matrix of full-chain words, rows over QOS configs, columns over bath configs.

    Defaults to all ``2**L_s`` and ``2**L_b`` configurations in ascending order.
    """
    if qos_configs is None:
        qos_configs = np.arange(1 << g.L_s, dtype=np.int64)
    if bath_configs is None:
        bath_configs = np.arange(1 << g.L_b, dtype=np.int64)
    return kernels.embed_table(
        np.asarray(qos_configs, dtype=np.int64), g.qos_bits,
        np.asarray(bath_configs, dtype=np.int64), g.bath_bits,
    )
