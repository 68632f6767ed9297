"""Backward one-way key chain and per-session blinding numbers.

Session j consumes chain key number m-j+1, so the first session uses the
deepest key (the one hardest to reach from the seed) and a later broadcast
lets a member hash *forward* along the chain to reach the keys of earlier
sessions it missed.  The session key is the chain key blinded by a
per-session random number beta_j; possession of beta_j is what a member's
life cycle actually gates.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .errors import ConfigurationError, ContractViolation
from .gf import FieldElement, FieldVector, PrimeField

# Domain-separation prefix for the production one-way function.
_ONEWAY_PREFIX = b"\x4b"


class OneWayFn:
    """Deterministic one-way map GF(q) -> GF(q)."""

    __slots__ = ("name", "field", "_fn")

    def __init__(self, name: str, field: PrimeField, fn: Callable[[int], int]):
        self.name = name
        self.field = field
        self._fn = fn

    def __call__(self, x: FieldElement) -> FieldElement:
        if x.field.q != self.field.q:
            raise ContractViolation(f"modulus mismatch: {self.field.q} vs {x.field.q}")
        return self.field.element(self._fn(x.value))

    def __repr__(self) -> str:
        return f"OneWayFn({self.name}, q={self.field.q})"


def standard_hash_fn(field: PrimeField) -> OneWayFn:
    """Production one-way function: SHA-256 over the 8-byte big-endian input
    with a fixed domain-separation prefix, reduced mod q by rejection
    sampling on the digest's 64-bit windows (re-hash the digest in the
    astronomically rare case every window is rejected)."""
    q = field.q
    limit = (1 << 64) // q * q

    def fn(x: int) -> int:
        digest = hashlib.sha256(_ONEWAY_PREFIX + x.to_bytes(8, "big")).digest()
        while True:
            for i in range(0, 32, 8):
                w = int.from_bytes(digest[i : i + 8], "big")
                if w < limit:
                    return w % q
            digest = hashlib.sha256(digest).digest()

    return OneWayFn("standard-hash-mod-q", field, fn)


def table_fn(field: PrimeField, table: Sequence[int]) -> OneWayFn:
    """Test one-way function backed by an explicit lookup table over GF(q).

    At tiny q a random table acts as a random oracle, which makes exhaustive
    security censuses possible."""
    if len(table) != field.q:
        raise ConfigurationError(f"table must have exactly q={field.q} entries")
    frozen = tuple(int(v) for v in table)
    for v in frozen:
        if not 0 <= v < field.q:
            raise ConfigurationError(f"table entry {v} outside [0, {field.q})")
    return OneWayFn("test-table", field, lambda x: frozen[x])


class FieldStream:
    """Seeded deterministic stream of GF(q) residues.

    SHA-256 in counter mode over (label || 0x00 || seed || counter); each
    digest is consumed as four 64-bit big-endian windows with rejection
    sampling, so the residues are exactly uniform."""

    __slots__ = ("field", "_prefix", "_counter", "_pending")

    def __init__(self, seed: bytes, label: bytes, field: PrimeField):
        self.field = field
        self._prefix = label + b"\x00" + bytes(seed)
        self._counter = 0
        self._pending: list[int] = []

    def next_value(self) -> int:
        q = self.field.q
        limit = (1 << 64) // q * q
        while True:
            while self._pending:
                w = self._pending.pop()
                if w < limit:
                    return w % q
            digest = hashlib.sha256(self._prefix + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._pending = [
                int.from_bytes(digest[i : i + 8], "big") for i in (24, 16, 8, 0)
            ]

    def next_element(self) -> FieldElement:
        return FieldElement(self.next_value(), self.field)

    def next_vector(self, length: int) -> FieldVector:
        return FieldVector(tuple(self.next_value() for _ in range(length)), self.field)


@dataclass(frozen=True)
class BackwardChain:
    """Keys [K_1, ..., K_m] with K_1 the seed and K_i = fn(K_{i-1})."""

    keys: tuple[FieldElement, ...]
    fn: OneWayFn

    @property
    def m(self) -> int:
        return len(self.keys)

    def key(self, index: int) -> FieldElement:
        """Chain key by 1-based chain index."""
        if not 1 <= index <= self.m:
            raise ContractViolation(f"chain index {index} outside [1, {self.m}]")
        return self.keys[index - 1]


@dataclass(frozen=True)
class BetaSequence:
    """Blinding numbers [beta_1, ..., beta_m], reproducible from the seed."""

    betas: tuple[FieldElement, ...]
    seed: bytes

    @property
    def m(self) -> int:
        return len(self.betas)

    def beta(self, j: int) -> FieldElement:
        if not 1 <= j <= self.m:
            raise ContractViolation(f"session {j} outside [1, {self.m}]")
        return self.betas[j - 1]


@dataclass(frozen=True)
class SessionKey:
    session: int
    value: FieldElement


def build_chain(seed: FieldElement, m: int, fn: OneWayFn) -> BackwardChain:
    """Derive the length-m chain from the seed by repeated application of fn."""
    if m < 1:
        raise ConfigurationError(f"chain length must be >= 1, got {m}")
    keys = [seed]
    for _ in range(m - 1):
        keys.append(fn(keys[-1]))
    return BackwardChain(keys=tuple(keys), fn=fn)


def chain_index(j: int, m: int) -> int:
    """Chain index consumed by session j: m - j + 1."""
    if not 1 <= j <= m:
        raise ContractViolation(f"session {j} outside [1, {m}]")
    return m - j + 1


def advance(key: FieldElement, steps: int, fn: OneWayFn) -> FieldElement:
    """Apply fn `steps` times (0 steps returns the key unchanged)."""
    if steps < 0:
        raise ContractViolation(f"steps must be >= 0, got {steps}")
    out = key
    for _ in range(steps):
        out = fn(out)
    return out


def generate_betas(seed: bytes, m: int, field: PrimeField) -> BetaSequence:
    """Draw m blinding numbers from the seeded generator (label "beta")."""
    if m < 1:
        raise ConfigurationError(f"need at least one session, got m={m}")
    stream = FieldStream(seed, b"beta", field)
    return BetaSequence(betas=tuple(stream.next_element() for _ in range(m)), seed=bytes(seed))


def generate_vectors(seed: bytes, m: int, length: int, field: PrimeField) -> tuple[FieldVector, ...]:
    """Draw m master vectors of the given length (label "vector")."""
    stream = FieldStream(seed, b"vector", field)
    return tuple(stream.next_vector(length) for _ in range(m))


def compose_session_key(beta: FieldElement, chain_key: FieldElement) -> FieldElement:
    """Session key value: beta + chain key (mod q)."""
    return beta + chain_key
