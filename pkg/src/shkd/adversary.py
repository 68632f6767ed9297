"""Mechanized attack experiments.

Two engines back the security claims:

* A symbolic knowledge closure: starting from a coalition's view (its own
  secrets, observed broadcasts, any explicitly granted values) the engine
  derives everything reachable under the *feasible* computation rules:
  hashing forward along the chain, recombining known shares whose vectors
  span the manager vector, and solving the two additive masking relations
  when all but one term is known.  One-way inversion and blinder guessing
  have no rule, which is exactly how the computational assumptions are
  mechanized; a session key is "safe" when it is absent from the fixpoint.

* An exact secrecy census: for small fields, enumerate every master vector
  consistent with an observation and count, per candidate value of the
  masked share, how many remain.  Equal counts = perfect secrecy of the
  sharing layer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .access import LinearAccessStructure, UserId
from .chain import OneWayFn
from .core import BroadcastMessage, GmState, PersonalSecret
from .errors import CensusInfeasibleError, ContractViolation, ScenarioError
from .gf import FieldElement, FieldVector, solve_combination

Atom = tuple
# Atom labels:
#   ("dot", s, uid, k)  share of user uid, vector k, session s
#   ("beta", j)         blinding number of session j
#   ("chain", i)        chain key with chain index i (session m-i+1)
#   ("gmdot", j)        manager share for session j
#   ("z", j)            masked chain key broadcast in session j
#   ("sk", j)           session key of session j


@dataclass(frozen=True)
class CoalitionView:
    """Everything a coalition starts from, before any derivation."""

    members: frozenset[UserId]
    secrets: tuple[PersonalSecret, ...]
    broadcasts: tuple[BroadcastMessage, ...]
    known_session_keys: dict[int, FieldElement] = dataclass_field(default_factory=dict)
    extra_dots: dict[tuple[int, UserId, int], FieldElement] = dataclass_field(default_factory=dict)
    extra_betas: dict[int, FieldElement] = dataclass_field(default_factory=dict)
    extra_chain_keys: dict[int, FieldElement] = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if {s.user for s in self.secrets} != set(self.members):
            raise ContractViolation("view secrets must correspond exactly to members")


class KnowledgeSet:
    """Closure result: labeled values plus how each one was obtained."""

    def __init__(self):
        self.atoms: dict[Atom, FieldElement] = {}
        self.derivation_log: dict[Atom, tuple[str, tuple[Atom, ...]]] = {}

    def knows(self, atom: Atom) -> bool:
        return atom in self.atoms

    def value(self, atom: Atom) -> FieldElement:
        return self.atoms[atom]

    def add(self, atom: Atom, value: FieldElement, rule: str, premises: tuple[Atom, ...] = ()) -> bool:
        if atom in self.atoms:
            if self.atoms[atom] != value:
                raise AssertionError(f"conflicting derivations for {atom}")
            return False
        self.atoms[atom] = value
        self.derivation_log[atom] = (rule, premises)
        return True

    def known_sessions_of(self, label: str) -> set[int]:
        return {a[1] for a in self.atoms if a[0] == label}


def knowledge_closure(
    view: CoalitionView,
    structure: LinearAccessStructure,
    fn: OneWayFn,
    m: int,
    *,
    beta_oracle: Optional[Callable[[int], FieldElement]] = None,
    rule_order_rng=None,
) -> KnowledgeSet:
    """Fixpoint of the feasible derivation rules over the coalition's view.

    `beta_oracle` is a harness self-test hook: supplying it removes the
    blinder blocker (models a broken generator) so every blinder becomes
    derivable.  `rule_order_rng` shuffles rule application order; the
    fixpoint must not depend on it.
    """
    ks = KnowledgeSet()
    for secret in view.secrets:
        for j in secret.cycle.sessions():
            for k, d in enumerate(secret.dots[j]):
                ks.add(("dot", j, secret.user, k), d, "view")
            ks.add(("beta", j), secret.betas[j], "view")
    for msg in view.broadcasts:
        ks.add(("z", msg.session), msg.z, "view")
        for uid, dots in msg.revealed:
            for k, d in enumerate(dots):
                ks.add(("dot", msg.session, uid, k), d, "view")
    for j, sk in view.known_session_keys.items():
        ks.add(("sk", j), sk, "view")
    for (s, uid, k), d in view.extra_dots.items():
        ks.add(("dot", s, uid, k), d, "view")
    for j, b in view.extra_betas.items():
        ks.add(("beta", j), b, "view")
    for i, c in view.extra_chain_keys.items():
        ks.add(("chain", i), c, "view")

    def rule_hash_forward() -> bool:
        changed = False
        for i in range(1, m):
            a = ("chain", i)
            if ks.knows(a) and ks.add(("chain", i + 1), fn(ks.value(a)), "hash-forward", (a,)):
                changed = True
        return changed

    def rule_recombine_shares() -> bool:
        changed = False
        for j in range(1, m + 1):
            if ks.knows(("gmdot", j)):
                continue
            entries = sorted(
                (a for a in ks.atoms if a[0] == "dot" and a[1] == j), key=lambda a: (a[2], a[3])
            )
            if not entries:
                continue
            vectors = [structure.vectors_of(a[2])[a[3]] for a in entries]
            coeffs = solve_combination(vectors, structure.gm_vector)
            if coeffs is None:
                continue
            acc = structure.field.zero
            for c, a in zip(coeffs, entries):
                acc = acc + c * ks.value(a)
            ks.add(("gmdot", j), acc, "recombine-shares", tuple(entries))
            changed = True
        return changed

    def rule_unmask() -> bool:
        changed = False
        for j in range(1, m + 1):
            za, ca, ga = ("z", j), ("chain", m - j + 1), ("gmdot", j)
            know = [ks.knows(a) for a in (za, ca, ga)]
            if sum(know) != 2:
                continue
            if not know[0]:
                changed |= ks.add(za, ks.value(ca) + ks.value(ga), "unmask", (ca, ga))
            elif not know[1]:
                changed |= ks.add(ca, ks.value(za) - ks.value(ga), "unmask", (za, ga))
            else:
                changed |= ks.add(ga, ks.value(za) - ks.value(ca), "unmask", (za, ca))
        return changed

    def rule_compose() -> bool:
        changed = False
        for j in range(1, m + 1):
            sa, ba, ca = ("sk", j), ("beta", j), ("chain", m - j + 1)
            know = [ks.knows(a) for a in (sa, ba, ca)]
            if sum(know) != 2:
                continue
            if not know[0]:
                changed |= ks.add(sa, ks.value(ba) + ks.value(ca), "compose", (ba, ca))
            elif not know[1]:
                changed |= ks.add(ba, ks.value(sa) - ks.value(ca), "compose", (sa, ca))
            else:
                changed |= ks.add(ca, ks.value(sa) - ks.value(ba), "compose", (sa, ba))
        return changed

    def rule_beta_oracle() -> bool:
        if beta_oracle is None:
            return False
        changed = False
        for j in range(1, m + 1):
            if not ks.knows(("beta", j)):
                changed |= ks.add(("beta", j), beta_oracle(j), "beta-oracle")
        return changed

    rules = [rule_hash_forward, rule_recombine_shares, rule_unmask, rule_compose, rule_beta_oracle]
    changed = True
    while changed:
        order = list(rules)
        if rule_order_rng is not None:
            rule_order_rng.shuffle(order)
        changed = False
        for rule in order:
            changed |= rule()
    return ks


def ground_truth_value(atom: Atom, gm: GmState) -> FieldElement:
    """The true value of an atom, from the manager's secrets."""
    label = atom[0]
    if label == "dot":
        _, s, uid, k = atom
        return gm.master_vector(s).dot(gm.structure.vectors_of(uid)[k])
    if label == "beta":
        return gm.betas.beta(atom[1])
    if label == "chain":
        return gm.chain.key(atom[1])
    if label == "gmdot":
        return gm.gm_dot(atom[1])
    if label == "z":
        j = atom[1]
        return gm.chain.key(gm.m - j + 1) + gm.gm_dot(j)
    if label == "sk":
        return gm.session_key(atom[1]).value
    raise ContractViolation(f"unknown atom label {label!r}")


def verify_closure_soundness(ks: KnowledgeSet, gm: GmState) -> None:
    """Every atom in the closure must match ground truth and be reproducible
    from its recorded premises."""
    for atom, value in ks.atoms.items():
        if value != ground_truth_value(atom, gm):
            raise AssertionError(f"closure value for {atom} disagrees with ground truth")
        rule, premises = ks.derivation_log[atom]
        for p in premises:
            if p not in ks.atoms:
                raise AssertionError(f"premise {p} of {atom} missing from closure")
        if rule == "hash-forward":
            if gm.fn(ks.value(premises[0])) != value:
                raise AssertionError(f"replay of {atom} via {rule} failed")
        elif rule in ("unmask", "compose"):
            a, b = (ks.value(p) for p in premises)
            if value not in (a + b, a - b, b - a):
                raise AssertionError(f"replay of {atom} via {rule} failed")


def secrecy_census(
    structure: LinearAccessStructure,
    observed: Union[Mapping[FieldVector, Union[int, FieldElement]], Iterable[tuple[FieldVector, Union[int, FieldElement]]]],
    *,
    target: Optional[FieldVector] = None,
    max_space: int = 10_000_000,
) -> dict[int, int]:
    """Exhaustive count of master vectors consistent with the observed dots,
    bucketed by the value of the target dot (the manager share by default).

    Equal buckets mean the observation reveals nothing about the target."""
    field = structure.field
    q, l = field.q, structure.dim
    if q**l > max_space:
        raise CensusInfeasibleError(f"{q}^{l} master vectors exceed the census budget")
    pairs = observed.items() if isinstance(observed, Mapping) else observed
    constraints: list[tuple[tuple[int, ...], int]] = []
    for w, val in pairs:
        if w.field != field or len(w) != l:
            raise ContractViolation("observed vector does not match field/dimension")
        constraints.append((w.values, val.value if isinstance(val, FieldElement) else int(val) % q))
    tvec = (target or structure.gm_vector).values
    counts = {c: 0 for c in range(q)}
    for v in itertools.product(range(q), repeat=l):
        ok = True
        for w, val in constraints:
            if sum(a * b for a, b in zip(v, w)) % q != val:
                ok = False
                break
        if ok:
            counts[sum(a * b for a, b in zip(v, tvec)) % q] += 1
    return counts


def census_is_uniform(counts: Mapping[int, int]) -> bool:
    return len(set(counts.values())) == 1


# -- the per-property attack suite ------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    """Outcome of one experiment: one property, one coalition, one target session."""

    prop: str
    view_mode: str
    coalition: tuple[UserId, ...]
    session: int
    sk_absent: bool
    personal_keys_private: bool
    census_uniform: Optional[bool]
    beta_known: bool
    chain_key_known: bool
    passed: bool


@dataclass
class AttackReport:
    verdicts: list[Verdict]

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def csv_rows(self) -> list[list[str]]:
        rows = [
            [
                "property",
                "view",
                "coalition",
                "session",
                "sk_absent",
                "personal_keys_private",
                "census_uniform",
                "beta_known",
                "chain_key_known",
                "result",
            ]
        ]
        for v in self.verdicts:
            rows.append(
                [
                    v.prop,
                    v.view_mode,
                    ";".join(str(u) for u in v.coalition),
                    str(v.session),
                    str(v.sk_absent).lower(),
                    str(v.personal_keys_private).lower(),
                    "" if v.census_uniform is None else str(v.census_uniform).lower(),
                    str(v.beta_known).lower(),
                    str(v.chain_key_known).lower(),
                    "pass" if v.passed else "FAIL",
                ]
            )
        return rows


PROPERTIES = ("forward", "backward", "revocation", "collusion")

# Above this many candidate master vectors the suite skips the census
# (the closure check still runs); exhaustive censuses belong to small q.
CENSUS_BUDGET = 200_000


def run_attack_suite(
    scenario,
    which: str = "all",
    *,
    view_mode: str = "proof",
    execution=None,
    beta_oracle_mutation: bool = False,
) -> AttackReport:
    """Execute the scenario, build per-property coalition views, and check
    that every out-of-window session key stays outside the closure (plus a
    sharing-layer census where feasible).

    view_mode "proof" grants coalitions the strongest view used in the
    security argument (all-session shares, early blinders and session keys,
    the chain seed for joiners); "cycle" grants only what members were
    actually issued.  `beta_oracle_mutation` deliberately removes the
    blinder blocker so the harness can prove it detects violations.
    """
    from . import sim  # local import; sim is layered above core

    if which not in PROPERTIES + ("all",):
        raise ContractViolation(f"unknown property {which!r}")
    if view_mode not in ("proof", "cycle"):
        raise ContractViolation(f"unknown view mode {view_mode!r}")
    ex = execution if execution is not None else sim.execute_scenario(scenario)
    gm: GmState = ex.gm
    props = PROPERTIES if which == "all" else (which,)
    verdicts: list[Verdict] = []
    oracle = (lambda j: gm.betas.beta(j)) if beta_oracle_mutation else None

    broadcasts = tuple(ex.broadcasts[j] for j in sorted(ex.broadcasts))
    revealed_dots = {
        (msg.session, uid, k)
        for msg in broadcasts
        for uid, dots in msg.revealed
        for k in range(len(dots))
    }

    def issued(uid: UserId) -> PersonalSecret:
        return ex.secrets[uid]

    def all_session_dots(users: Iterable[UserId]) -> dict:
        return {
            (s, uid, k): gm.master_vector(s).dot(w)
            for uid in users
            for s in range(1, gm.m + 1)
            for k, w in enumerate(gm.structure.vectors_of(uid))
        }

    def judge(prop: str, coalition: frozenset[UserId], j: int, view: CoalitionView,
              run_census: bool) -> Verdict:
        if gm.structure.is_authorized(coalition):
            raise ScenarioError(
                f"{prop} coalition {sorted(coalition)} is authorized; experiment is vacuous"
            )
        ks = knowledge_closure(view, gm.structure, gm.fn, gm.m, beta_oracle=oracle)
        verify_closure_soundness(ks, gm)
        sk_absent = not ks.knows(("sk", j))
        allowed = set(view.extra_dots) | revealed_dots | {
            (s, sec.user, k)
            for sec in view.secrets
            for s in sec.cycle.sessions()
            for k in range(len(sec.dots[s]))
        }
        private = all(a[1:] in allowed for a in ks.atoms if a[0] == "dot")
        census_uniform = None
        if run_census and gm.field.q ** gm.structure.dim <= CENSUS_BUDGET and j in ex.broadcasts:
            observed = []
            for uid, dots in ex.broadcasts[j].revealed:
                for k, d in enumerate(dots):
                    observed.append((gm.structure.vectors_of(uid)[k], d))
            for (s, uid, k), d in view.extra_dots.items():
                if s == j:
                    observed.append((gm.structure.vectors_of(uid)[k], d))
            for sec in view.secrets:
                if sec.cycle.covers(j):
                    for k, d in enumerate(sec.dots[j]):
                        observed.append((gm.structure.vectors_of(sec.user)[k], d))
            census_uniform = census_is_uniform(secrecy_census(gm.structure, observed))
        passed = sk_absent and private and census_uniform is not False
        return Verdict(
            prop=prop,
            view_mode=view_mode,
            coalition=tuple(sorted(coalition)),
            session=j,
            sk_absent=sk_absent,
            personal_keys_private=private,
            census_uniform=census_uniform,
            beta_known=ks.knows(("beta", j)),
            chain_key_known=ks.knows(("chain", gm.m - j + 1)),
            passed=passed,
        )

    sessions_run = sorted(ex.broadcasts)
    for j in sessions_run:
        revoked = frozenset(u for u, c in gm.ledger.items() if c.end < j)
        joiners = frozenset(u for u, c in gm.ledger.items() if c.start > j)

        if "forward" in props and revoked:
            view = CoalitionView(
                members=revoked,
                secrets=tuple(issued(u) for u in sorted(revoked)),
                broadcasts=broadcasts,
                known_session_keys=(
                    {s: gm.session_key(s).value for s in range(1, j)}
                    if view_mode == "proof"
                    else {}
                ),
                extra_dots=all_session_dots(sorted(revoked)) if view_mode == "proof" else {},
                extra_betas=(
                    {s: gm.betas.beta(s) for s in range(1, j)} if view_mode == "proof" else {}
                ),
            )
            verdicts.append(judge("forward", revoked, j, view, run_census=True))

        if "revocation" in props and revoked:
            view = CoalitionView(
                members=revoked,
                secrets=tuple(issued(u) for u in sorted(revoked)),
                broadcasts=broadcasts,
                extra_dots=all_session_dots(sorted(revoked)) if view_mode == "proof" else {},
            )
            verdicts.append(judge("revocation", revoked, j, view, run_census=True))

        if "backward" in props and joiners:
            view = CoalitionView(
                members=joiners,
                secrets=tuple(issued(u) for u in sorted(joiners)),
                broadcasts=broadcasts,
                known_session_keys=(
                    {s: gm.session_key(s).value for s in range(j + 1, gm.m + 1)}
                    if view_mode == "proof"
                    else {}
                ),
                extra_betas=(
                    {s: gm.betas.beta(s) for s in range(j + 1, gm.m + 1)}
                    if view_mode == "proof"
                    else {}
                ),
                extra_chain_keys={1: gm.chain.key(1)} if view_mode == "proof" else {},
            )
            verdicts.append(judge("backward", joiners, j, view, run_census=True))

        if "collusion" in props and revoked and joiners:
            coalition = revoked | joiners
            e_star = max(gm.ledger[u].end for u in revoked)
            s_star = min(gm.ledger[u].start for u in joiners)
            view = CoalitionView(
                members=coalition,
                secrets=tuple(issued(u) for u in sorted(coalition)),
                broadcasts=broadcasts,
                known_session_keys=(
                    {
                        s: gm.session_key(s).value
                        for s in list(range(1, e_star + 1)) + list(range(s_star, gm.m + 1))
                    }
                    if view_mode == "proof"
                    else {}
                ),
                extra_dots=all_session_dots(sorted(coalition)) if view_mode == "proof" else {},
                extra_betas=(
                    {
                        s: gm.betas.beta(s)
                        for s in list(range(1, e_star + 1)) + list(range(s_star, gm.m + 1))
                    }
                    if view_mode == "proof"
                    else {}
                ),
                extra_chain_keys={1: gm.chain.key(1)} if view_mode == "proof" else {},
            )
            verdicts.append(judge("collusion", coalition, j, view, run_census=False))

    return AttackReport(verdicts=verdicts)
