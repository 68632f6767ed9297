"""Deterministic discrete-event simulator.

Sessions advance one by one: scheduled joins are issued, the manager
broadcasts, a seeded loss model decides which members the message reaches,
and every member either recovers directly, heals the missed key from the
earliest later broadcast it received, or ends up unrecoverable.  Every
recovered key is compared against the manager's ground truth; a mismatch
aborts the run.  Identical scenarios (seeds included) produce byte-identical
reports.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dataclass_field
from typing import Mapping, Optional, Sequence, Union

from .access import UserId, make_multipartite, make_threshold
from .core import (
    BroadcastMessage,
    GmState,
    LifeCycle,
    PersonalSecret,
    gm_setup,
    member_recover,
    member_self_heal,
)
from .errors import ShkdError, ScenarioError, SystemFailedError
from .gf import is_prime

RECEIVED = "received"
HEALED = "healed"
UNRECOVERABLE = "unrecoverable"
NOT_MEMBER = "not-member"


@dataclass(frozen=True)
class LossModel:
    """Per-(member, session) delivery model.

    kind "iid": each delivery independently dropped with probability p.
    kind "burst": two-state channel per member; p_enter is the chance of
    entering the bad (dropping) state, p_stay the chance of remaining in it.
    kind "mask": explicit (user, session) drop list, no randomness.
    """

    kind: str = "iid"
    p: float = 0.0
    p_enter: float = 0.0
    p_stay: float = 0.0
    drops: frozenset[tuple[UserId, int]] = frozenset()

    def validate(self) -> None:
        if self.kind not in ("iid", "burst", "mask"):
            raise ScenarioError(f"unknown loss model {self.kind!r}")
        for name, value in (("p", self.p), ("p_enter", self.p_enter), ("p_stay", self.p_stay)):
            if not 0.0 <= value <= 1.0:
                raise ScenarioError(f"loss parameter {name}={value} outside [0, 1]")


@dataclass(frozen=True)
class JoinEvent:
    """A member joining at `session` with a life cycle ending at `end`."""

    session: int
    end: int
    part: Optional[int] = None  # multipartite structures need a target part


@dataclass(frozen=True)
class Scenario:
    """Full description of one reproducible run."""

    q: int
    m: int
    kind: str  # "threshold" | "multipartite"
    roster: tuple[tuple[UserId, tuple[int, int]], ...]
    t: Optional[int] = None
    user_xs: Optional[tuple[tuple[UserId, int], ...]] = None
    parts: Optional[tuple[tuple[int, tuple[UserId, ...]], ...]] = None  # (x, users)
    joins: tuple[JoinEvent, ...] = ()
    n_dummies: int = 0
    loss: LossModel = LossModel()
    seed_chain: int = 1
    seed_beta: int = 2
    seed_vectors: int = 3
    seed_loss: int = 4

    def validate(self) -> None:
        if not is_prime(self.q):
            raise ScenarioError(f"q={self.q} is not prime")
        if self.m < 1:
            raise ScenarioError(f"m={self.m} must be >= 1")
        ids = [u for u, _ in self.roster]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate roster ids")
        for uid, (s, e) in self.roster:
            if not 1 <= s <= e <= self.m:
                raise ScenarioError(f"cycle ({s}, {e}) of user {uid} outside [1, {self.m}]")
        if self.kind == "threshold":
            if self.t is None or self.user_xs is None:
                raise ScenarioError("threshold scenarios need t and user_xs")
            known = {u for u, _ in self.user_xs}
        elif self.kind == "multipartite":
            if self.parts is None:
                raise ScenarioError("multipartite scenarios need parts")
            known = {u for _, users in self.parts for u in users}
            for ev in self.joins:
                if ev.part is None or not 0 <= ev.part < len(self.parts):
                    raise ScenarioError("multipartite joins need a valid part index")
        else:
            raise ScenarioError(f"unknown structure kind {self.kind!r}")
        missing = set(ids) - known
        if missing:
            raise ScenarioError(f"roster ids {sorted(missing)} missing from the structure")
        universe = len(known) + self.n_dummies + len(self.joins)
        if self.q <= universe:
            raise ScenarioError(f"q={self.q} too small for {universe} users (need q > n)")
        for ev in self.joins:
            if not 1 <= ev.session <= ev.end <= self.m:
                raise ScenarioError(f"join ({ev.session}, {ev.end}) outside [1, {self.m}]")
        self.loss.validate()

    def build_structure(self):
        if self.kind == "threshold":
            return make_threshold(self.t, dict(self.user_xs), self.q, n_dummies=self.n_dummies)
        return make_multipartite(
            [users for _, users in self.parts],
            [x for x, _ in self.parts],
            self.q,
            n_dummies=self.n_dummies,
        )


@dataclass(frozen=True)
class Outcome:
    user: UserId
    session: int
    status: str
    healed_from: Optional[int] = None
    multiplications: int = 0


@dataclass(frozen=True)
class SessionStats:
    """Measured overheads of one broadcast session."""

    session: int
    t_j: int  # revealed set size (revoked + padding)
    revoked: int
    padding: int
    element_count: int
    element_bits: int
    formula_bits: int
    id_bits: int
    total_bytes: int
    max_multiplications: int
    mult_bound: int
    received: int
    healed: int
    unrecoverable: int


@dataclass(frozen=True)
class RunReport:
    q: int
    m: int
    kind: str
    element_bits_per_value: int
    roster: tuple[tuple[UserId, int, int, int], ...]  # uid, start, end, arity
    outcomes: tuple[Outcome, ...]
    sessions: tuple[SessionStats, ...]
    system_failed_at: Optional[int]

    def outcome(self, uid: UserId, j: int) -> str:
        for o in self.outcomes:
            if o.user == uid and o.session == j:
                return o.status
        return NOT_MEMBER

    def outcome_csv_rows(self) -> list[list[str]]:
        rows = [["user", "session", "status", "healed_from", "multiplications"]]
        for o in self.outcomes:
            rows.append(
                [
                    str(o.user),
                    str(o.session),
                    o.status,
                    "" if o.healed_from is None else str(o.healed_from),
                    str(o.multiplications),
                ]
            )
        return rows


@dataclass
class Execution:
    """A finished run with all artifacts (simulator + attack-suite input)."""

    scenario: Scenario
    gm: GmState
    secrets: dict[UserId, PersonalSecret]
    broadcasts: dict[int, BroadcastMessage]
    report: RunReport


class _Delivery:
    """Streamed per-(member, session) delivery decisions, seeded and stable."""

    def __init__(self, loss: LossModel, seed: int):
        self.loss = loss
        self.rng = random.Random(seed)
        self.bad_state: dict[UserId, bool] = {}

    def delivered(self, uid: UserId, session: int) -> bool:
        loss = self.loss
        if loss.kind == "mask":
            return (uid, session) not in loss.drops
        if loss.kind == "iid":
            return self.rng.random() >= loss.p
        bad = self.bad_state.get(uid, False)
        bad = self.rng.random() < (loss.p_stay if bad else loss.p_enter)
        self.bad_state[uid] = bad
        return not bad


def execute_scenario(sc: Scenario) -> Execution:
    """Run the scenario and keep every artifact."""
    sc.validate()
    try:
        structure = sc.build_structure()
        gm, secrets = gm_setup(
            structure,
            sc.m,
            sc.seed_chain % sc.q,
            sc.seed_beta,
            {uid: LifeCycle(*cycle) for uid, cycle in sc.roster},
            vector_seed=sc.seed_vectors,
        )
    except ShkdError as exc:
        raise ScenarioError(f"scenario setup failed: {exc}") from exc

    joins_at: dict[int, list[JoinEvent]] = {}
    for ev in sorted(sc.joins, key=lambda e: e.session):
        joins_at.setdefault(ev.session, []).append(ev)

    delivery = _Delivery(sc.loss, sc.seed_loss)
    delivered: dict[tuple[UserId, int], bool] = {}
    broadcasts: dict[int, BroadcastMessage] = {}
    failed_at: Optional[int] = None

    for j in range(1, sc.m + 1):
        for ev in joins_at.get(j, ()):
            uid, secret = gm.add_member(ev.session, ev.end, part=ev.part)
            secrets[uid] = secret
        active = gm.members_at(j)
        try:
            broadcasts[j] = gm.broadcast(j, active)
        except SystemFailedError:
            failed_at = j
            break
        for uid in sorted(active):
            delivered[(uid, j)] = delivery.delivered(uid, j)
        if j < sc.m:
            gm.advance_session()

    outcomes: list[Outcome] = []
    per_target: dict[int, dict[str, int]] = {
        j: {RECEIVED: 0, HEALED: 0, UNRECOVERABLE: 0} for j in broadcasts
    }
    max_mults: dict[int, int] = {j: 0 for j in broadcasts}

    for uid in sorted(gm.ledger):
        secret = secrets[uid]
        for j in secret.cycle.sessions():
            if j not in broadcasts:
                if failed_at is not None and j >= failed_at:
                    outcomes.append(Outcome(uid, j, UNRECOVERABLE))
                continue
            if delivered.get((uid, j)):
                res = member_recover(secret, broadcasts[j], gm.structure)
                if res.key.value != gm.session_key(j).value:
                    raise AssertionError(f"user {uid} recovered a wrong key for session {j}")
                outcomes.append(Outcome(uid, j, RECEIVED, None, res.multiplications))
                per_target[j][RECEIVED] += 1
                max_mults[j] = max(max_mults[j], res.multiplications)
                continue
            j2 = next(
                (
                    jj
                    for jj in range(j + 1, secret.cycle.end + 1)
                    if delivered.get((uid, jj))
                ),
                None,
            )
            if j2 is None:
                outcomes.append(Outcome(uid, j, UNRECOVERABLE))
                per_target[j][UNRECOVERABLE] += 1
                continue
            res = member_self_heal(secret, broadcasts[j2], j, gm.structure, gm.fn)
            if res.key.value != gm.session_key(j).value:
                raise AssertionError(f"user {uid} healed a wrong key for session {j}")
            outcomes.append(Outcome(uid, j, HEALED, j2, res.multiplications))
            per_target[j][HEALED] += 1
            max_mults[j2] = max(max_mults[j2], res.multiplications)

    bits = gm.field.element_bits()
    sessions = []
    for j in sorted(broadcasts):
        wire = gm.wire_stats[j]
        t_j = len(broadcasts[j].revealed)
        sessions.append(
            SessionStats(
                session=j,
                t_j=t_j,
                revoked=len(gm.revealed_log[j]) - len(gm.padding_log[j]),
                padding=len(gm.padding_log[j]),
                element_count=wire.element_count,
                element_bits=wire.element_bits,
                formula_bits=(t_j + 1) * bits,
                id_bits=wire.id_bits,
                total_bytes=wire.total_bytes,
                max_multiplications=max_mults[j],
                mult_bound=2 * (t_j * t_j + t_j),
                received=per_target[j][RECEIVED],
                healed=per_target[j][HEALED],
                unrecoverable=per_target[j][UNRECOVERABLE],
            )
        )

    report = RunReport(
        q=sc.q,
        m=sc.m,
        kind=sc.kind,
        element_bits_per_value=bits,
        roster=tuple(
            (uid, gm.ledger[uid].start, gm.ledger[uid].end, gm.structure.arity(uid))
            for uid in sorted(gm.ledger)
        ),
        outcomes=tuple(sorted(outcomes, key=lambda o: (o.user, o.session))),
        sessions=tuple(sessions),
        system_failed_at=failed_at,
    )
    return Execution(scenario=sc, gm=gm, secrets=secrets, broadcasts=broadcasts, report=report)


def run_scenario(sc: Scenario) -> RunReport:
    return execute_scenario(sc).report


def summarize(report: RunReport) -> list[list[str]]:
    """Per-session summary rows: measured overheads next to the formula values."""
    rows = [
        [
            "session",
            "t_j",
            "formula_bits",
            "element_bits",
            "total_bytes",
            "max_multiplications",
            "mult_bound",
            "healed",
            "received",
            "unrecoverable",
        ]
    ]
    for s in report.sessions:
        rows.append(
            [
                str(s.session),
                str(s.t_j),
                str(s.formula_bits),
                str(s.element_bits),
                str(s.total_bytes),
                str(s.max_multiplications),
                str(s.mult_bound),
                str(s.healed),
                str(s.received),
                str(s.unrecoverable),
            ]
        )
    return rows
