"""Self-healing session-key distribution over a lossy broadcast channel.

Library, deterministic simulator and CLI for a group manager that hands out
per-session keys so that members recover missed keys on their own while
revoked users, late joiners, and coalitions of both learn nothing.
"""

from .access import (
    DUMMY_ID_BASE,
    LinearAccessStructure,
    ShareSet,
    UserId,
    is_dummy_id,
    make_generic,
    make_multipartite,
    make_threshold,
)
from .chain import (
    BackwardChain,
    BetaSequence,
    FieldStream,
    OneWayFn,
    SessionKey,
    advance,
    build_chain,
    chain_index,
    compose_session_key,
    generate_betas,
    generate_vectors,
    standard_hash_fn,
    table_fn,
)
from .core import (
    BroadcastMessage,
    GmState,
    LifeCycle,
    PersonalSecret,
    RecoveryResult,
    WireStats,
    broadcast_wire_stats,
    decode_broadcast,
    decode_personal_secret,
    encode_broadcast,
    encode_personal_secret,
    gm_setup,
    member_recover,
    member_self_heal,
)
from .gf import FieldElement, FieldVector, PrimeField, dot, is_prime, solve_combination

__version__ = "0.1.0"
