"""Linear secret-sharing access structures.

A structure maps each user to one or more public vectors; a user set is
authorized exactly when the group manager's vector lies in the span of the
set's vectors.  Shares are inner products of a secret master vector with
those public vectors, so an authorized set can recombine its shares into
the manager's share with public coefficients while an unauthorized set
learns nothing.

Three kinds are provided: threshold (Vandermonde rows, any t users),
complete multipartite (authorized = users from two distinct parts), and
generic (caller supplies the vectors and the maximal unauthorized sets).
Every structure also carries a pool of dummy users, never group members,
whose shares can be revealed as padding in broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    ConfigurationError,
    ContractViolation,
    IdSpaceExhaustedError,
    NotAuthorizedError,
    PaddingExhaustedError,
    RevocationCapacityError,
)
from .gf import FieldElement, FieldVector, PrimeField, solve_combination

UserId = int

# Dummy users live at and above this id; real users below it.
DUMMY_ID_BASE = 1 << 20


def is_dummy_id(uid: UserId) -> bool:
    return uid >= DUMMY_ID_BASE


@dataclass(frozen=True)
class ShareSet:
    """Per-user share lists for one session: entries[u][k] = v . phi(u)[k]."""

    session: int
    entries: dict[UserId, tuple[FieldElement, ...]]


class LinearAccessStructure:
    """Base class: immutable user -> vectors map plus span-based authorization."""

    kind = "generic"

    def __init__(
        self,
        field: PrimeField,
        dim: int,
        phi: Mapping[UserId, Sequence[FieldVector]],
        gm_vector: FieldVector,
        dummy_ids: Iterable[UserId] = (),
    ):
        if dim < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {dim}")
        if gm_vector.field != field or len(gm_vector) != dim:
            raise ConfigurationError("manager vector does not match field/dimension")
        if gm_vector.is_zero():
            raise ConfigurationError("manager vector must be nonzero")
        frozen: dict[UserId, tuple[FieldVector, ...]] = {}
        for uid, vecs in phi.items():
            vecs = tuple(vecs)
            if not vecs:
                raise ConfigurationError(f"user {uid} has no vectors")
            for w in vecs:
                if w.field != field or len(w) != dim:
                    raise ConfigurationError(f"vector of user {uid} does not match field/dimension")
            frozen[int(uid)] = vecs
        dummies = frozenset(int(d) for d in dummy_ids)
        for d in dummies:
            if d not in frozen:
                raise ConfigurationError(f"dummy {d} has no vectors")
            if not is_dummy_id(d):
                raise ConfigurationError(f"dummy id {d} below the reserved range {DUMMY_ID_BASE}")
        for uid in frozen:
            if is_dummy_id(uid) and uid not in dummies:
                raise ConfigurationError(f"id {uid} is in the reserved dummy range")
        self.field = field
        self.dim = dim
        self.phi = frozen
        self.gm_vector = gm_vector
        self.dummy_ids = dummies

    # -- introspection ----------------------------------------------------

    @property
    def users(self) -> frozenset[UserId]:
        return frozenset(self.phi)

    @property
    def real_users(self) -> frozenset[UserId]:
        return frozenset(u for u in self.phi if not is_dummy_id(u))

    def vectors_of(self, uid: UserId) -> tuple[FieldVector, ...]:
        try:
            return self.phi[uid]
        except KeyError:
            raise ContractViolation(f"unknown user {uid}") from None

    def arity(self, uid: UserId) -> int:
        return len(self.vectors_of(uid))

    def _flatten(self, users: Iterable[UserId]) -> list[tuple[UserId, int, FieldVector]]:
        out = []
        for uid in sorted(set(users)):
            for k, w in enumerate(self.vectors_of(uid)):
                out.append((uid, k, w))
        return out

    # -- core operations ---------------------------------------------------

    def is_authorized(self, users: Iterable[UserId]) -> bool:
        """True iff the manager vector lies in the span of the users' vectors."""
        entries = self._flatten(users)
        if not entries:
            return False
        return solve_combination([w for _, _, w in entries], self.gm_vector) is not None

    def reconstruction_coefficients(
        self, users: Iterable[UserId]
    ) -> dict[tuple[UserId, int], FieldElement]:
        """Coefficients expressing the manager vector over the users' vectors.

        Keyed by (user, vector index).  Raises NotAuthorizedError when the
        set cannot reconstruct."""
        entries = self._flatten(users)
        coeffs = (
            solve_combination([w for _, _, w in entries], self.gm_vector) if entries else None
        )
        if coeffs is None:
            raise NotAuthorizedError(f"set {sorted(set(users))} is not authorized")
        return {(uid, k): c for (uid, k, _), c in zip(entries, coeffs)}

    def compute_shares(self, v: FieldVector, session: int) -> ShareSet:
        """Dot the master vector against every user's vectors (dummies included)."""
        if v.field != self.field or len(v) != self.dim:
            raise ContractViolation("master vector does not match field/dimension")
        return ShareSet(
            session=session,
            entries={
                uid: tuple(v.dot(w) for w in vecs) for uid, vecs in sorted(self.phi.items())
            },
        )

    # -- padding -----------------------------------------------------------

    def select_padding(
        self, revoked: Iterable[UserId], active: Iterable[UserId]
    ) -> frozenset[UserId]:
        """Smallest user set W, disjoint from `active`, such that W together
        with `revoked` is a *maximal* unauthorized set.

        Deterministic: candidates are taken in ascending id with real users
        preferred over dummies (the dummy pool is kept in reserve).
        """
        revoked = frozenset(revoked)
        active = frozenset(active)
        for uid in revoked | active:
            self.vectors_of(uid)
        if revoked & active:
            raise ContractViolation("revoked and active sets overlap")
        if revoked and self.is_authorized(revoked):
            raise RevocationCapacityError(
                f"revoked set {sorted(revoked)} is authorized; no padding can mask it"
            )
        return self._padding(revoked, active)

    def _padding(self, revoked: frozenset[UserId], active: frozenset[UserId]) -> frozenset[UserId]:
        raise NotImplementedError

    def _pool(self, revoked: frozenset[UserId], active: frozenset[UserId]) -> list[UserId]:
        pool = [u for u in self.phi if u not in revoked and u not in active]
        pool.sort(key=lambda u: (is_dummy_id(u), u))
        return pool

    # -- membership growth ---------------------------------------------------

    def add_user(self, uid: Optional[UserId] = None, **kwargs) -> tuple[UserId, "LinearAccessStructure"]:
        raise ConfigurationError(
            f"{self.kind} structures cannot synthesize vectors for new users"
        )

    def _next_real_id(self) -> UserId:
        uid = max((u for u in self.phi if not is_dummy_id(u)), default=0) + 1
        if uid >= DUMMY_ID_BASE:
            raise IdSpaceExhaustedError("real-user id range exhausted")
        return uid


class ThresholdStructure(LinearAccessStructure):
    """Any t users reconstruct: phi(u) = (1, x_u, ..., x_u^(t-1)), target (1, 0, ..., 0)."""

    kind = "threshold"

    def __init__(self, field, phi, gm_vector, dummy_ids, t: int, xs: Mapping[UserId, int]):
        super().__init__(field, t, phi, gm_vector, dummy_ids)
        self.t = t
        self.xs = dict(xs)

    def _padding(self, revoked, active):
        need = self.t - 1 - len(revoked)
        pool = self._pool(revoked, active)
        if len(pool) < need:
            raise PaddingExhaustedError(
                f"need {need} padding users, only {len(pool)} inactive ids available"
            )
        return frozenset(pool[:need])

    def reconstruction_coefficients(self, users):
        # Lagrange interpolation at zero when the set is exactly a square
        # Vandermonde system; costs 2(|B|^2 - |B|) multiplications.
        ids = sorted(set(users))
        if len(ids) == self.t:
            q = self.field.q
            coeffs: dict[tuple[UserId, int], FieldElement] = {}
            for uid in ids:
                self.vectors_of(uid)
                num, den = 1, 1
                xk = self.xs[uid]
                for other in ids:
                    if other != uid:
                        xr = self.xs[other]
                        num = num * xr % q
                        den = den * (xr - xk) % q
                coeffs[(uid, 0)] = FieldElement(num * pow(den, q - 2, q) % q, self.field)
            total = [0] * self.dim
            for (uid, _), c in coeffs.items():
                for r, w in enumerate(self.phi[uid][0].values):
                    total[r] = (total[r] + c.value * w) % q
            if tuple(total) != self.gm_vector.values:
                raise AssertionError("interpolation failed to reproduce the manager vector")
            return coeffs
        return super().reconstruction_coefficients(users)

    def add_user(self, uid=None, **kwargs):
        if kwargs:
            raise ContractViolation(f"unexpected arguments {sorted(kwargs)}")
        used = set(self.xs.values())
        x = next((c for c in range(1, self.field.q) if c not in used), None)
        if x is None:
            raise IdSpaceExhaustedError(f"all {self.field.q - 1} x-coordinates are in use")
        if uid is None:
            uid = self._next_real_id()
        elif uid in self.phi:
            raise ContractViolation(f"user {uid} already exists")
        phi = dict(self.phi)
        phi[uid] = (_vandermonde_row(self.field, x, self.t),)
        xs = dict(self.xs)
        xs[uid] = x
        struct = ThresholdStructure(self.field, phi, self.gm_vector, self.dummy_ids, self.t, xs)
        return uid, struct


class MultipartiteStructure(LinearAccessStructure):
    """Authorized = users from at least two distinct parts: phi(u) = (x_part, 1)."""

    kind = "multipartite"

    def __init__(self, field, phi, gm_vector, dummy_ids, parts: Sequence[frozenset[UserId]],
                 part_xs: Sequence[int]):
        super().__init__(field, 2, phi, gm_vector, dummy_ids)
        self.parts = tuple(frozenset(p) for p in parts)
        self.part_xs = tuple(part_xs)
        self._part_of = {u: i for i, p in enumerate(self.parts) for u in p}

    def part_of(self, uid: UserId) -> int:
        try:
            return self._part_of[uid]
        except KeyError:
            raise ContractViolation(f"unknown user {uid}") from None

    def _padding(self, revoked, active):
        if revoked:
            touched = {self.part_of(u) for u in revoked}
            # A revoked set spanning two parts is authorized and was already
            # rejected, so exactly one part is touched here.
            part = self.parts[touched.pop()]
            w = part - revoked
            if w & active:
                raise PaddingExhaustedError(
                    "revoked users' part still has active members; cannot complete it"
                )
            return frozenset(w)
        best = None
        for i, part in enumerate(self.parts):
            if part & active:
                continue
            if best is None or len(part) < len(self.parts[best]):
                best = i
        if best is None:
            raise PaddingExhaustedError("every part has active members")
        return frozenset(self.parts[best])

    def add_user(self, uid=None, *, part: Optional[int] = None, **kwargs):
        if kwargs:
            raise ContractViolation(f"unexpected arguments {sorted(kwargs)}")
        if part is None or not 0 <= part < len(self.parts):
            raise ContractViolation(f"joining a multipartite structure requires a part index in [0, {len(self.parts)})")
        if uid is None:
            uid = self._next_real_id()
        elif uid in self.phi:
            raise ContractViolation(f"user {uid} already exists")
        phi = dict(self.phi)
        phi[uid] = (self.field.vector((self.part_xs[part], 1)),)
        parts = [set(p) for p in self.parts]
        parts[part].add(uid)
        struct = MultipartiteStructure(
            self.field, phi, self.gm_vector, self.dummy_ids,
            [frozenset(p) for p in parts], self.part_xs,
        )
        return uid, struct


class GenericStructure(LinearAccessStructure):
    """Caller-supplied vectors plus an explicit list of maximal unauthorized sets."""

    kind = "generic"

    def __init__(self, field, phi, gm_vector, dummy_ids, max_unauthorized: Sequence[Iterable[UserId]]):
        super().__init__(field, len(gm_vector), phi, gm_vector, dummy_ids)
        self.max_unauthorized = tuple(frozenset(s) for s in max_unauthorized)
        self._validate_max_unauthorized()

    def _validate_max_unauthorized(self):
        users = sorted(self.phi)
        for s in self.max_unauthorized:
            for uid in s:
                self.vectors_of(uid)
            if self.is_authorized(s):
                raise ConfigurationError(f"declared maximal unauthorized set {sorted(s)} is authorized")
            for uid in users:
                if uid not in s and not self.is_authorized(s | {uid}):
                    raise ConfigurationError(
                        f"set {sorted(s)} is not maximal: adding {uid} stays unauthorized"
                    )

    def _padding(self, revoked, active):
        best: Optional[frozenset[UserId]] = None
        for s in self.max_unauthorized:
            if not revoked <= s:
                continue
            w = s - revoked
            if w & active:
                continue
            if best is None or (len(w), tuple(sorted(w))) < (len(best), tuple(sorted(best))):
                best = frozenset(w)
        if best is None:
            raise PaddingExhaustedError(
                "no declared maximal unauthorized set extends the revoked set without active users"
            )
        return best


def _vandermonde_row(field: PrimeField, x: int, t: int) -> FieldVector:
    return field.vector(pow(x, k, field.q) for k in range(t))


def make_threshold(
    t: int,
    user_xs: Mapping[UserId, int],
    q: int,
    n_dummies: int = 0,
) -> ThresholdStructure:
    """Threshold structure over GF(q): any t users are authorized.

    `user_xs` assigns each real user its distinct nonzero x-coordinate;
    `n_dummies` extra padding-only users get the smallest free coordinates.
    """
    field = PrimeField(q)
    if t < 1:
        raise ConfigurationError(f"threshold must be >= 1, got {t}")
    if n_dummies < 0:
        raise ConfigurationError("dummy count cannot be negative")
    xs = {int(u): int(x) % field.q for u, x in user_xs.items()}
    if any(x == 0 for x in xs.values()):
        raise ConfigurationError("x-coordinates must be nonzero")
    if len(set(xs.values())) != len(xs):
        raise ConfigurationError("x-coordinates must be distinct")
    if q <= len(xs) + n_dummies:
        raise ConfigurationError(
            f"q={q} too small for {len(xs)} users plus {n_dummies} dummies"
        )
    used = set(xs.values())
    free = (c for c in range(1, q) if c not in used)
    dummy_ids = []
    for i in range(n_dummies):
        d = DUMMY_ID_BASE + i
        xs[d] = next(free)
        dummy_ids.append(d)
    phi = {u: (_vandermonde_row(field, x, t),) for u, x in xs.items()}
    gm = field.vector([1] + [0] * (t - 1))
    return ThresholdStructure(field, phi, gm, dummy_ids, t, xs)


def make_multipartite(
    parts: Sequence[Iterable[UserId]],
    part_xs: Sequence[int],
    q: int,
    n_dummies: int = 0,
) -> MultipartiteStructure:
    """Complete multipartite structure over GF(q): phi(u) = (x_part, 1),
    authorized = members of at least two distinct parts.

    Dummies, when requested, form an extra padding-only part with the
    smallest free coordinate.
    """
    field = PrimeField(q)
    part_sets = [frozenset(int(u) for u in p) for p in parts]
    if len(part_sets) < 2:
        raise ConfigurationError("need at least two parts")
    if any(not p for p in part_sets):
        raise ConfigurationError("parts must be non-empty")
    for i in range(len(part_sets)):
        for j in range(i + 1, len(part_sets)):
            if part_sets[i] & part_sets[j]:
                raise ConfigurationError("parts must be disjoint")
    xs = [int(x) % q for x in part_xs]
    if len(xs) != len(part_sets):
        raise ConfigurationError("one x-coordinate per part required")
    if len(set(xs)) != len(xs):
        raise ConfigurationError("part x-coordinates must be distinct")
    if n_dummies < 0:
        raise ConfigurationError("dummy count cannot be negative")
    dummy_ids = []
    if n_dummies:
        free = next((c for c in range(q) if c not in set(xs)), None)
        if free is None:
            raise ConfigurationError(f"q={q} too small for a dummy part")
        dummy_ids = [DUMMY_ID_BASE + i for i in range(n_dummies)]
        part_sets.append(frozenset(dummy_ids))
        xs.append(free)
    if q < len(part_sets):
        raise ConfigurationError(f"q={q} smaller than the number of parts")
    phi = {}
    for i, p in enumerate(part_sets):
        for u in p:
            phi[u] = (field.vector((xs[i], 1)),)
    gm = field.vector((1, 0))
    return MultipartiteStructure(field, phi, gm, dummy_ids, part_sets, xs)


def make_generic(
    phi: Mapping[UserId, Sequence[FieldVector]],
    gm_vector: FieldVector,
    max_unauth_sets: Sequence[Iterable[UserId]],
) -> GenericStructure:
    """Structure from explicit vector assignments plus the declared maximal
    unauthorized sets used for padding selection."""
    dummy_ids = [u for u in phi if is_dummy_id(u)]
    return GenericStructure(gm_vector.field, phi, gm_vector, dummy_ids, max_unauth_sets)
