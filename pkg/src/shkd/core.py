"""Protocol engines: group-manager state, member-side key recovery and
self-healing, and the bit-exact broadcast wire codec.

The group manager holds one secret master vector per session, a backward
one-way key chain and the blinding sequence.  Each session's broadcast
reveals the shares of a maximal unauthorized user set (revoked users plus
padding) together with the chain key masked by the manager's own share.
Any current member can extend the revealed set to an authorized one with
its personal share and unmask the chain key; everyone else faces an
unauthorized share set and a one-way chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .access import LinearAccessStructure, UserId, is_dummy_id
from .chain import (
    BackwardChain,
    BetaSequence,
    OneWayFn,
    SessionKey,
    advance,
    build_chain,
    chain_index,
    compose_session_key,
    generate_betas,
    generate_vectors,
    standard_hash_fn,
)
from .errors import (
    CannotHealForwardError,
    ConfigurationError,
    ContractViolation,
    DecodeError,
    NotAMemberError,
    NotAuthorizedError,
    RecoveryFailureError,
    SequencingError,
    SessionExhaustedError,
)
from .gf import FieldElement, FieldVector, PrimeField

BROADCAST_MAGIC = b"SHKD"
SECRET_MAGIC = b"SHKS"
WIRE_VERSION = 1

# Below this the dummy pool or the roster cannot fit alongside q > n.
MIN_MODULUS = 5


@dataclass(frozen=True)
class LifeCycle:
    """Membership window [start, end], inclusive, in session numbers."""

    start: int
    end: int

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ConfigurationError(f"invalid life cycle ({self.start}, {self.end})")

    def covers(self, j: int) -> bool:
        return self.start <= j <= self.end

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def sessions(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class PersonalSecret:
    """Everything one member stores: per-session share dots and blinders,
    covering exactly its life cycle."""

    user: UserId
    cycle: LifeCycle
    dots: dict[int, tuple[FieldElement, ...]]
    betas: dict[int, FieldElement]

    def __post_init__(self):
        expected = set(self.cycle.sessions())
        if set(self.dots) != expected or set(self.betas) != expected:
            raise ContractViolation("secret sessions must cover exactly the life cycle")


@dataclass(frozen=True)
class BroadcastMessage:
    """One session's broadcast: revealed (user, share list) pairs in
    ascending user id, plus the masked chain key."""

    session: int
    revealed: tuple[tuple[UserId, tuple[FieldElement, ...]], ...]
    z: FieldElement

    def revealed_ids(self) -> frozenset[UserId]:
        return frozenset(uid for uid, _ in self.revealed)


@dataclass(frozen=True)
class WireStats:
    """Payload accounting for one encoded broadcast.  Field-element bits are
    tracked unaligned (ceil(log2 q) per element) separately from id bits and
    framing overhead, so formula checks are exact."""

    element_count: int
    element_bits: int
    element_bytes: int
    id_bits: int
    overhead_bits: int
    total_bytes: int


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of a successful recovery or heal."""

    key: SessionKey
    chain_key: FieldElement
    multiplications: int
    healed_from: Optional[int] = None


def _as_seed_bytes(seed: Union[bytes, int]) -> bytes:
    if isinstance(seed, int):
        return seed.to_bytes(max(8, (seed.bit_length() + 7) // 8), "big")
    return bytes(seed)


class GmState:
    """Group-manager secrets and session bookkeeping.

    Mutated only through setup/broadcast/advance/add operations; confined to
    one logical owner at a time.
    """

    def __init__(
        self,
        structure: LinearAccessStructure,
        m: int,
        vectors: Sequence[FieldVector],
        chain: BackwardChain,
        betas: BetaSequence,
        fn: OneWayFn,
    ):
        self.structure = structure
        self.m = m
        self.vectors = tuple(vectors)
        self.chain = chain
        self.betas = betas
        self.fn = fn
        self.ledger: dict[UserId, LifeCycle] = {}
        self.current_session = 1
        self.wire_stats: dict[int, WireStats] = {}
        self.revealed_log: dict[int, frozenset[UserId]] = {}
        self.padding_log: dict[int, frozenset[UserId]] = {}

    # -- secrets ------------------------------------------------------------

    @property
    def field(self) -> PrimeField:
        return self.structure.field

    @property
    def revoked(self) -> frozenset[UserId]:
        return frozenset(
            u for u, c in self.ledger.items() if c.end < self.current_session
        )

    def members_at(self, j: int) -> frozenset[UserId]:
        return frozenset(u for u, c in self.ledger.items() if c.covers(j))

    def master_vector(self, j: int) -> FieldVector:
        if not 1 <= j <= self.m:
            raise ContractViolation(f"session {j} outside [1, {self.m}]")
        return self.vectors[j - 1]

    def gm_dot(self, j: int) -> FieldElement:
        return self.master_vector(j).dot(self.structure.gm_vector)

    def session_key(self, j: int) -> SessionKey:
        value = compose_session_key(
            self.betas.beta(j), self.chain.key(chain_index(j, self.m))
        )
        return SessionKey(session=j, value=value)

    def personal_secret(self, uid: UserId) -> PersonalSecret:
        try:
            cycle = self.ledger[uid]
        except KeyError:
            raise ContractViolation(f"user {uid} was never issued a secret") from None
        vecs = self.structure.vectors_of(uid)
        dots = {
            j: tuple(self.master_vector(j).dot(w) for w in vecs)
            for j in cycle.sessions()
        }
        betas = {j: self.betas.beta(j) for j in cycle.sessions()}
        return PersonalSecret(user=uid, cycle=cycle, dots=dots, betas=betas)

    # -- protocol steps -------------------------------------------------------

    def broadcast(self, j: int, active: Iterable[UserId]) -> BroadcastMessage:
        """Emit session j's message for the given set of current members."""
        if j != self.current_session:
            raise SequencingError(
                f"broadcast for session {j} but current session is {self.current_session}"
            )
        active = frozenset(active)
        for uid in active:
            cycle = self.ledger.get(uid)
            if cycle is None or not cycle.covers(j):
                raise ContractViolation(f"user {uid} is not a member in session {j}")
        revoked = self.revoked
        padding = self.structure.select_padding(revoked, active)
        reveal_ids = sorted(padding | revoked)
        shares = self.structure.compute_shares(self.master_vector(j), j)
        revealed = tuple((uid, shares.entries[uid]) for uid in reveal_ids)
        z = self.chain.key(chain_index(j, self.m)) + self.gm_dot(j)
        msg = BroadcastMessage(session=j, revealed=revealed, z=z)
        self.wire_stats[j] = broadcast_wire_stats(msg, self.field.q)
        self.revealed_log[j] = frozenset(reveal_ids)
        self.padding_log[j] = padding
        return msg

    def advance_session(self) -> "GmState":
        if self.current_session >= self.m:
            raise SessionExhaustedError(f"all {self.m} sessions have been used")
        self.current_session += 1
        return self

    def add_member(
        self, join: int, end: int, *, part: Optional[int] = None
    ) -> tuple[UserId, PersonalSecret]:
        """Issue a fresh identity with life cycle [join, end].  A returning
        principal simply gets a new identity; old ones stay revoked."""
        if join < self.current_session:
            raise SequencingError(
                f"cannot join at past session {join} (current {self.current_session})"
            )
        if not join <= end <= self.m:
            raise ConfigurationError(f"life cycle ({join}, {end}) outside [1, {self.m}]")
        kwargs = {} if part is None else {"part": part}
        uid, structure = self.structure.add_user(**kwargs)
        self.structure = structure
        self.ledger[uid] = LifeCycle(join, end)
        return uid, self.personal_secret(uid)


def gm_setup(
    structure: LinearAccessStructure,
    m: int,
    chain_seed: Union[int, FieldElement],
    beta_seed: Union[bytes, int],
    initial_cycles: Mapping[UserId, Union[LifeCycle, tuple[int, int]]],
    *,
    fn: Optional[OneWayFn] = None,
    vector_seed: Union[bytes, int, None] = None,
    vectors: Optional[Sequence[FieldVector]] = None,
    betas: Optional[Sequence[Union[int, FieldElement]]] = None,
) -> tuple[GmState, dict[UserId, PersonalSecret]]:
    """Run the set-up phase: draw master vectors, build the backward chain
    and the blinding sequence, and issue every initial member its secret.

    Master vectors and blinders come from seeded generators with distinct
    stream labels; explicit `vectors`/`betas` overrides exist so tests can
    pin exact instances.
    """
    field = structure.field
    if m < 1:
        raise ConfigurationError(f"need at least one session, got m={m}")
    if field.q < MIN_MODULUS:
        raise ConfigurationError(f"modulus {field.q} below practical minimum {MIN_MODULUS}")
    if field.q <= len(structure.users):
        raise ConfigurationError(
            f"modulus {field.q} must exceed the {len(structure.users)}-user universe"
        )
    fn = fn or standard_hash_fn(field)
    if fn.field != field:
        raise ContractViolation("one-way function field does not match structure field")

    beta_bytes = _as_seed_bytes(beta_seed)
    if betas is None:
        beta_seq = generate_betas(beta_bytes, m, field)
    else:
        if len(betas) != m:
            raise ConfigurationError(f"need exactly m={m} blinders, got {len(betas)}")
        beta_seq = BetaSequence(
            betas=tuple(
                b if isinstance(b, FieldElement) else field.element(b) for b in betas
            ),
            seed=beta_bytes,
        )
    if vectors is None:
        vec_bytes = _as_seed_bytes(beta_seed if vector_seed is None else vector_seed)
        master = generate_vectors(vec_bytes, m, structure.dim, field)
    else:
        if len(vectors) != m:
            raise ConfigurationError(f"need exactly m={m} master vectors, got {len(vectors)}")
        master = tuple(
            v if isinstance(v, FieldVector) else field.vector(v) for v in vectors
        )
        for v in master:
            if len(v) != structure.dim:
                raise ConfigurationError("master vector length must equal structure dimension")

    seed_elem = chain_seed if isinstance(chain_seed, FieldElement) else field.element(chain_seed)
    gm = GmState(
        structure=structure,
        m=m,
        vectors=master,
        chain=build_chain(seed_elem, m, fn),
        betas=beta_seq,
        fn=fn,
    )
    secrets: dict[UserId, PersonalSecret] = {}
    for uid, cycle in sorted(initial_cycles.items()):
        if not isinstance(cycle, LifeCycle):
            cycle = LifeCycle(*cycle)
        if cycle.end > m:
            raise ConfigurationError(f"cycle of user {uid} ends after session m={m}")
        if uid not in structure.users:
            raise ConfigurationError(f"user {uid} is not in the structure")
        if is_dummy_id(uid):
            raise ConfigurationError(f"dummy {uid} cannot be a member")
        gm.ledger[uid] = cycle
        secrets[uid] = gm.personal_secret(uid)
    return gm, secrets


# -- member side ---------------------------------------------------------------


def member_recover(
    secret: PersonalSecret,
    msg: BroadcastMessage,
    structure: LinearAccessStructure,
) -> RecoveryResult:
    """Recover the session key of msg.session from the broadcast plus the
    member's own share.

    The member joins its own id to the revealed set, derives reconstruction
    coefficients, recombines the dots into the manager's share, unmasks the
    chain key and adds its stored blinder.  One multiplication is counted
    per coefficient-share product.
    """
    j = msg.session
    if not secret.cycle.covers(j):
        raise NotAMemberError(f"user {secret.user} holds no secrets for session {j}")
    values: dict[tuple[UserId, int], FieldElement] = {}
    for uid, dots in msg.revealed:
        if len(dots) != structure.arity(uid):
            raise ContractViolation(f"revealed arity for user {uid} does not match structure")
        for k, d in enumerate(dots):
            values[(uid, k)] = d
    for k, d in enumerate(secret.dots[j]):
        values.setdefault((secret.user, k), d)
    group = msg.revealed_ids() | {secret.user}
    try:
        coeffs = structure.reconstruction_coefficients(group)
    except NotAuthorizedError as exc:
        raise RecoveryFailureError(
            f"revealed set plus user {secret.user} cannot reconstruct: {exc}"
        ) from None
    field = structure.field
    acc = field.zero
    mults = 0
    for key in sorted(coeffs):
        acc = acc + coeffs[key] * values[key]
        mults += 1
    chain_key = msg.z - acc
    sk = compose_session_key(secret.betas[j], chain_key)
    return RecoveryResult(
        key=SessionKey(session=j, value=sk), chain_key=chain_key, multiplications=mults
    )


def member_self_heal(
    secret: PersonalSecret,
    later: BroadcastMessage,
    target: int,
    structure: LinearAccessStructure,
    fn: OneWayFn,
) -> RecoveryResult:
    """Recover a missed session key from a *later* broadcast: unmask the
    later chain key, hash forward to the missed session's chain key, and
    add the stored blinder for the missed session."""
    j2 = later.session
    if target > j2:
        raise CannotHealForwardError(f"cannot heal session {target} from earlier broadcast {j2}")
    if not secret.cycle.covers(target):
        raise NotAMemberError(f"user {secret.user} holds no blinder for session {target}")
    base = member_recover(secret, later, structure)
    chain_key = advance(base.chain_key, j2 - target, fn)
    sk = compose_session_key(secret.betas[target], chain_key)
    return RecoveryResult(
        key=SessionKey(session=target, value=sk),
        chain_key=chain_key,
        multiplications=base.multiplications,
        healed_from=j2,
    )


# -- wire codec ------------------------------------------------------------------


def _element_width(q: int) -> int:
    return ((q - 1).bit_length() + 7) // 8


def _check_element(e: FieldElement, q: int) -> int:
    if e.field.q != q:
        raise ContractViolation(f"element modulus {e.field.q} does not match codec modulus {q}")
    return e.value


def encode_broadcast(msg: BroadcastMessage, q: int) -> bytes:
    """Frame: magic "SHKD" | version | session (4B BE) | entry count (2B BE) |
    per entry: user id (4B BE), arity (1B), dots | masked key.  Field
    elements occupy exactly ceil(ceil(log2 q)/8) bytes, big-endian."""
    width = _element_width(q)
    if not 1 <= msg.session < (1 << 32):
        raise ContractViolation(f"session {msg.session} does not fit the frame")
    if len(msg.revealed) >= (1 << 16):
        raise ContractViolation("too many revealed entries for the frame")
    out = bytearray(BROADCAST_MAGIC)
    out.append(WIRE_VERSION)
    out += msg.session.to_bytes(4, "big")
    out += len(msg.revealed).to_bytes(2, "big")
    for uid, dots in msg.revealed:
        if not 0 <= uid < (1 << 32):
            raise ContractViolation(f"user id {uid} does not fit the frame")
        if not 1 <= len(dots) < (1 << 8):
            raise ContractViolation(f"arity {len(dots)} does not fit the frame")
        out += uid.to_bytes(4, "big")
        out.append(len(dots))
        for d in dots:
            out += _check_element(d, q).to_bytes(width, "big")
    out += _check_element(msg.z, q).to_bytes(width, "big")
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated message")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def uint(self, n: int) -> int:
        return int.from_bytes(self.take(n), "big")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError(f"{len(self.data) - self.pos} trailing bytes")


def decode_broadcast(data: bytes, q: int) -> BroadcastMessage:
    field = PrimeField(q)
    width = _element_width(q)
    r = _Reader(data)
    if r.take(4) != BROADCAST_MAGIC:
        raise DecodeError("bad magic")
    if r.uint(1) != WIRE_VERSION:
        raise DecodeError("unsupported version")
    session = r.uint(4)
    if session < 1:
        raise DecodeError(f"invalid session {session}")
    count = r.uint(2)
    revealed = []
    for _ in range(count):
        uid = r.uint(4)
        arity = r.uint(1)
        if arity < 1:
            raise DecodeError("zero-arity entry")
        dots = []
        for _ in range(arity):
            v = r.uint(width)
            if v >= q:
                raise DecodeError(f"non-canonical residue {v} for modulus {q}")
            dots.append(field.element(v))
        revealed.append((uid, tuple(dots)))
    zv = r.uint(width)
    if zv >= q:
        raise DecodeError(f"non-canonical residue {zv} for modulus {q}")
    r.done()
    return BroadcastMessage(session=session, revealed=tuple(revealed), z=field.element(zv))


def encode_personal_secret(secret: PersonalSecret, q: int) -> bytes:
    """Frame: magic "SHKS" | version | user id (4B BE) | start (4B BE) |
    end (4B BE) | arity (1B) | per session: dots then blinder.  Stands in
    for the out-of-band secure channel of the set-up phase."""
    width = _element_width(q)
    arity = len(secret.dots[secret.cycle.start])
    if not 1 <= arity < (1 << 8):
        raise ContractViolation(f"arity {arity} does not fit the frame")
    if not 0 <= secret.user < (1 << 32):
        raise ContractViolation(f"user id {secret.user} does not fit the frame")
    out = bytearray(SECRET_MAGIC)
    out.append(WIRE_VERSION)
    out += secret.user.to_bytes(4, "big")
    out += secret.cycle.start.to_bytes(4, "big")
    out += secret.cycle.end.to_bytes(4, "big")
    out.append(arity)
    for j in secret.cycle.sessions():
        dots = secret.dots[j]
        if len(dots) != arity:
            raise ContractViolation("inconsistent arity across sessions")
        for d in dots:
            out += _check_element(d, q).to_bytes(width, "big")
        out += _check_element(secret.betas[j], q).to_bytes(width, "big")
    return bytes(out)


def decode_personal_secret(data: bytes, q: int) -> PersonalSecret:
    field = PrimeField(q)
    width = _element_width(q)
    r = _Reader(data)
    if r.take(4) != SECRET_MAGIC:
        raise DecodeError("bad magic")
    if r.uint(1) != WIRE_VERSION:
        raise DecodeError("unsupported version")
    uid = r.uint(4)
    start = r.uint(4)
    end = r.uint(4)
    if not 1 <= start <= end:
        raise DecodeError(f"invalid life cycle ({start}, {end})")
    arity = r.uint(1)
    if arity < 1:
        raise DecodeError("zero arity")
    dots: dict[int, tuple[FieldElement, ...]] = {}
    betas: dict[int, FieldElement] = {}
    for j in range(start, end + 1):
        row = []
        for _ in range(arity):
            v = r.uint(width)
            if v >= q:
                raise DecodeError(f"non-canonical residue {v} for modulus {q}")
            row.append(field.element(v))
        b = r.uint(width)
        if b >= q:
            raise DecodeError(f"non-canonical residue {b} for modulus {q}")
        dots[j] = tuple(row)
        betas[j] = field.element(b)
    r.done()
    return PersonalSecret(user=uid, cycle=LifeCycle(start, end), dots=dots, betas=betas)


def broadcast_wire_stats(msg: BroadcastMessage, q: int) -> WireStats:
    bits = (q - 1).bit_length()
    width = _element_width(q)
    n_entries = len(msg.revealed)
    n_elements = sum(len(dots) for _, dots in msg.revealed) + 1
    return WireStats(
        element_count=n_elements,
        element_bits=n_elements * bits,
        element_bytes=n_elements * width,
        id_bits=32 * n_entries,
        overhead_bits=(4 + 1 + 4 + 2 + n_entries) * 8,
        total_bytes=len(encode_broadcast(msg, q)),
    )
