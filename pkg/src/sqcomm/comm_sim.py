"""Coordinator-model simulation of SQ access to distributed data, with exact
bit accounting.

k players each hold private row blocks of a matrix A and/or a vector b; a
coordinator talks to each player over a two-way channel and serves SQ requests
against the stacked data.  Blocks may also be public (known to the coordinator,
charged zero bits) or owned by any single player regardless of stack position.
Every message is charged per an EncodingSpec, and the full transcript is kept
for reporting, export, and replay.

Two access families share a session:

* stacked access - the coordinator composes a player-choice stage with a local
  sampling stage, reproducing the l2 law of the stacked vector/matrix exactly;
* linear-combination access - every player holds a same-shape share, the
  coordinator serves queries by fanning out to all k players and serves samples
  through a dominating vector (oversampled access + rejection).

Randomness is caller-owned: coordinator decisions draw from the Generator
passed to each operation, and player-local sampling draws from a child spawned
per exchange, so a transcript replay (with player data deleted) reproduces
every coordinator decision bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .sq_access import (
    AllZero,
    IndexOutOfRange,
    SqMatrix,
    SqVector,
    build_sq_matrix,
    build_sq_vector,
    exact_distribution,
    rejection_round_cap,
    sq_row,
    sq_sample,
    RejectionSample,
    Timeout,
)

PUBLIC = "public"


class DimensionMismatch(ValueError):
    """Raised when block shapes cannot form a consistent session."""


class AlreadySetup(RuntimeError):
    """Raised when a one-time setup runs twice on a session."""


class NotSetup(RuntimeError):
    """Raised when an access runs before its one-time setup."""


class Cancellation(RuntimeError):
    """Raised when a linear combination cancels below tolerance."""


CANCELLATION_TOL = 1e-9
DEFAULT_REJECTION_DELTA = 1e-3


@dataclass(frozen=True)
class EncodingSpec:
    """Bit widths for protocol messages.

    Scalars are charged a fixed width, indices the global width of the space
    they address, and every coordinator request carries one opcode.
    """

    scalar_bits: int = 32
    opcode_bits: int = 8

    def __post_init__(self):
        if self.scalar_bits < 8:
            raise ValueError("scalar_bits must be at least 8")

    @staticmethod
    def index_bits(count: int) -> int:
        if count < 1:
            raise ValueError("index space must be nonempty")
        return math.ceil(math.log2(count)) if count > 1 else 0


@dataclass(frozen=True)
class Message:
    round: int
    sender: str
    receiver: str
    kind: str
    bits: int
    phase: str
    payload: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Annotation:
    """Zero-bit transcript entry recording a simulation-side scalar (e.g. phi)."""

    kind: str
    value: object


class BitMeter:
    """Append-only transcript with the running bit total."""

    def __init__(self):
        self.entries: list = []
        self.total_bits: int = 0

    @property
    def messages(self) -> list:
        return [e for e in self.entries if isinstance(e, Message)]

    def add(self, entry) -> None:
        self.entries.append(entry)
        if isinstance(entry, Message):
            self.total_bits += entry.bits


@dataclass(frozen=True, eq=False)
class _VecBlock:
    owner: object            # player index or PUBLIC
    offset: int
    values: np.ndarray | None


@dataclass(frozen=True, eq=False)
class _MatBlock:
    owner: object
    offset: int              # global row offset
    matrix: np.ndarray | None


class _OwnerVec:
    """One owner's view of its stacked vector blocks."""

    def __init__(self, blocks):
        self.globals = np.concatenate(
            [np.arange(b.offset, b.offset + b.values.size) for b in blocks]
        ) if blocks else np.zeros(0, dtype=np.int64)
        self.values = np.concatenate([b.values for b in blocks]) if blocks else None
        self.handle = None
        if self.values is not None and np.any(self.values != 0):
            self.handle = build_sq_vector(self.values)
        self.norm = self.handle.norm if self.handle is not None else 0.0
        self.size = int(self.globals.size)


class _OwnerMat:
    """One owner's view of its stacked matrix blocks."""

    def __init__(self, blocks):
        self.globals = np.concatenate(
            [np.arange(b.offset, b.offset + b.matrix.shape[0]) for b in blocks]
        ) if blocks else np.zeros(0, dtype=np.int64)
        self.matrix = np.vstack([b.matrix for b in blocks]) if blocks else None
        self.handle: SqMatrix | None = None
        if self.matrix is not None and np.any(self.matrix != 0):
            self.handle = build_sq_matrix(self.matrix)
        self.fro = (
            self.handle.row_norm_vector.norm if self.handle is not None else 0.0
        )
        self.rows = int(self.globals.size)


def _player_name(owner) -> str:
    return "PUB" if owner == PUBLIC else f"P{owner + 1}"


class Session:
    """Protocol state: block layout (public metadata), player data (private),
    coordinator knowledge, and the metered transcript."""

    def __init__(self, k: int, a_blocks, b_blocks, encoding: EncodingSpec | None = None):
        if k < 1:
            raise ValueError("need at least one player")
        self.k = int(k)
        self.encoding = encoding if encoding is not None else EncodingSpec()
        self.meter = BitMeter()
        self._round = 0
        self._replay_queue: deque | None = None

        owners = list(range(self.k)) + [PUBLIC]
        self.b_blocks: list[_VecBlock] = []
        off = 0
        for owner, values in b_blocks:
            owner = PUBLIC if owner is None else owner
            if owner != PUBLIC and not 0 <= owner < self.k:
                raise ValueError(f"owner {owner} outside [0, {self.k})")
            arr = np.asarray(values)
            arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise DimensionMismatch("vector blocks must be nonempty 1-d")
            self.b_blocks.append(_VecBlock(owner, off, arr))
            off += arr.size
        self.m = off

        self.a_blocks: list[_MatBlock] = []
        off = 0
        n_cols = None
        for owner, matrix in a_blocks:
            owner = PUBLIC if owner is None else owner
            if owner != PUBLIC and not 0 <= owner < self.k:
                raise ValueError(f"owner {owner} outside [0, {self.k})")
            arr = np.asarray(matrix)
            arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64)
            if arr.ndim != 2 or arr.size == 0:
                raise DimensionMismatch("matrix blocks must be nonempty 2-d")
            if n_cols is None:
                n_cols = arr.shape[1]
            elif arr.shape[1] != n_cols:
                raise DimensionMismatch("matrix blocks disagree on column count")
            self.a_blocks.append(_MatBlock(owner, off, arr))
            off += arr.shape[0]
        self.a_rows = off
        self.n = n_cols

        if self.a_blocks and self.b_blocks and self.a_rows != self.m:
            raise DimensionMismatch(
                f"stacked row counts disagree: A has {self.a_rows}, b has {self.m}"
            )

        self._b_owner = {o: _OwnerVec([bl for bl in self.b_blocks if bl.owner == o]) for o in owners}
        self._a_owner = {o: _OwnerMat([bl for bl in self.a_blocks if bl.owner == o]) for o in owners}

        # routing tables: global index -> (owner, index local to the owner's view)
        self._b_route = self._build_route(
            [(bl.owner, bl.offset, bl.values.size) for bl in self.b_blocks]
        )
        self._a_route = self._build_route(
            [(bl.owner, bl.offset, bl.matrix.shape[0]) for bl in self.a_blocks]
        )

        # coordinator knowledge, filled by the one-time setups
        self.b_setup_done = False
        self.b_norms: np.ndarray | None = None
        self.b_sizes: list | None = None
        self.a_setup_done = False
        self.a_fro_norms: np.ndarray | None = None
        self.a_row_counts: list | None = None

    # layout-only sizes (valid even in a replay clone, where data is stripped)

    def _b_share_size(self, owner) -> int:
        return sum(bl.values.size for bl in self.b_blocks if bl.owner == owner)

    def _a_share_rows(self, owner) -> int:
        return sum(bl.matrix.shape[0] for bl in self.a_blocks if bl.owner == owner)

    def _lincomb_b_size(self) -> int:
        sizes = {self._b_share_size(i) for i in range(self.k)}
        if len(sizes) != 1 or 0 in sizes:
            raise DimensionMismatch("vector shares differ in length")
        return sizes.pop()

    def _lincomb_a_shape(self):
        row_counts = {self._a_share_rows(i) for i in range(self.k)}
        if len(row_counts) != 1 or 0 in row_counts:
            raise DimensionMismatch("matrix shares differ in shape")
        return row_counts.pop(), self.n

    @staticmethod
    def _build_route(spans):
        starts, ends, owners, locals_ = [], [], [], []
        local_used: dict = {}
        for owner, offset, length in spans:
            starts.append(offset)
            ends.append(offset + length)
            owners.append(owner)
            locals_.append(local_used.get(owner, 0))
            local_used[owner] = local_used.get(owner, 0) + length
        return starts, ends, owners, locals_

    @staticmethod
    def _route(route, g: int):
        starts, ends, owners, locals_ = route
        for s, e, o, loc in zip(starts, ends, owners, locals_):
            if s <= g < e:
                return o, loc + (g - s)
        raise IndexOutOfRange(f"index {g} outside the stacked range")

    # --- transcript plumbing -------------------------------------------------

    def _exchange(self, owner: int, kind: str, phase: str, req_bits: int,
                  resp_bits: int, respond):
        """One round: coordinator request to a player, player response back."""
        if self._replay_queue is not None:
            req = self._pop(Message)
            resp = self._pop(Message)
            if req.kind != kind or resp.kind != kind:
                raise RuntimeError(f"transcript mismatch: expected {kind}, saw {req.kind}")
            payload = resp.payload
        else:
            payload = respond()
        self._round += 1
        name = _player_name(owner)
        self.meter.add(Message(self._round, "C", name, kind, req_bits, phase))
        self.meter.add(Message(self._round, name, "C", kind, resp_bits, phase, payload))
        return payload, req_bits + resp_bits

    def _annotate(self, kind: str, compute):
        """Record (or replay) a simulation-side scalar as a zero-bit entry."""
        if self._replay_queue is not None:
            entry = self._pop(Annotation)
            if entry.kind != kind:
                raise RuntimeError(f"transcript mismatch: expected {kind}, saw {entry.kind}")
            return entry.value
        value = compute()
        self.meter.add(Annotation(kind, value))
        return value

    def _pop(self, cls):
        if not self._replay_queue:
            raise RuntimeError("replay transcript exhausted")
        entry = self._replay_queue.popleft()
        if not isinstance(entry, cls):
            raise RuntimeError("replay transcript out of order")
        return entry

    @property
    def replaying(self) -> bool:
        return self._replay_queue is not None


def open_session(parts, encoding: EncodingSpec | None = None) -> Session:
    """Open a session from per-player (A_part, b_part) pairs, stacked in order.

    Either side of a pair may be None (the player holds nothing there).
    """
    parts = list(parts)
    a_blocks = [(i, a) for i, (a, _) in enumerate(parts) if a is not None]
    b_blocks = [(i, b) for i, (_, b) in enumerate(parts) if b is not None]
    return Session(len(parts), a_blocks, b_blocks, encoding)


def open_session_blocks(k: int, a_blocks, b_blocks, encoding: EncodingSpec | None = None) -> Session:
    """Open a session from explicit (owner, data) blocks; owner None means public."""
    return Session(k, a_blocks, b_blocks, encoding)


def make_replay_session(session: Session) -> Session:
    """Clone the session layout with private data deleted; responses come from
    the recorded transcript.  Public blocks stay (the coordinator knows them)."""
    a_blocks = [
        (bl.owner, bl.matrix if bl.owner == PUBLIC else np.zeros_like(bl.matrix))
        for bl in session.a_blocks
    ]
    b_blocks = [
        (bl.owner, bl.values if bl.owner == PUBLIC else np.zeros_like(bl.values))
        for bl in session.b_blocks
    ]
    clone = Session(session.k, a_blocks, b_blocks, session.encoding)
    # drop the private views entirely; only the layout and public data remain
    for o in range(clone.k):
        clone._b_owner[o] = None
        clone._a_owner[o] = None
    clone._replay_queue = deque(session.meter.entries)
    return clone


def assemble_stacked(session: Session):
    """Simulation-side view of the stacked (A, b); None for an absent side.

    Not a protocol operation: used by oracles, validators, and the output
    stand-ins, never by coordinator logic.
    """
    A = None
    if session.a_blocks:
        A = np.vstack([bl.matrix for bl in session.a_blocks])
    b = None
    if session.b_blocks:
        b = np.concatenate([bl.values for bl in session.b_blocks])
    return A, b


# --- stacked-access protocol ops ---------------------------------------------

def coord_b_setup(session: Session) -> int:
    """One-time norm/size broadcast for the vector side; returns bits charged.

    Every player answers (empty holdings answer zero), so the cost is exactly
    k * (opcode_bits + scalar_bits + index_bits(m)).
    """
    if session.b_setup_done:
        raise AlreadySetup("vector setup already ran on this session")
    if not session.b_blocks:
        raise DimensionMismatch("session holds no vector blocks")
    enc = session.encoding
    norms, sizes = [], []
    for i in range(session.k):
        ov = session._b_owner[i]
        payload, _ = session._exchange(
            i, "b_setup", "setup",
            req_bits=enc.opcode_bits,
            resp_bits=enc.scalar_bits + enc.index_bits(session.m),
            respond=(lambda ov=ov: (ov.norm, ov.size)),
        )
        norms.append(float(payload[0]))
        sizes.append(int(payload[1]))
    session.b_norms = np.asarray(norms)
    session.b_sizes = sizes
    session.b_setup_done = True
    return session.k * (enc.opcode_bits + enc.scalar_bits + enc.index_bits(session.m))


def coord_a_setup(session: Session) -> int:
    """One-time Frobenius-norm/row-count broadcast for the matrix side."""
    if session.a_setup_done:
        raise AlreadySetup("matrix setup already ran on this session")
    if not session.a_blocks:
        raise DimensionMismatch("session holds no matrix blocks")
    enc = session.encoding
    norms, counts = [], []
    for i in range(session.k):
        om = session._a_owner[i]
        payload, _ = session._exchange(
            i, "a_setup", "setup",
            req_bits=enc.opcode_bits,
            resp_bits=enc.scalar_bits + enc.index_bits(session.a_rows),
            respond=(lambda om=om: (om.fro, om.rows)),
        )
        norms.append(float(payload[0]))
        counts.append(int(payload[1]))
    session.a_fro_norms = np.asarray(norms)
    session.a_row_counts = counts
    session.a_setup_done = True
    return session.k * (enc.opcode_bits + enc.scalar_bits + enc.index_bits(session.a_rows))


def _stage1_pick(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = weights.sum()
    if total <= 0.0:
        raise AllZero("no sampling mass anywhere")
    u = rng.random() * total
    idx = int(np.searchsorted(np.cumsum(weights), u, side="right"))
    if idx >= weights.size:
        idx = int(np.flatnonzero(weights)[-1])
    return idx


def coord_b_sample(session: Session, rng: np.random.Generator):
    """Draw a global index under the stacked vector's l2 law; returns (j, bits).

    Stage 1 picks an owner from the setup norms (public mass sampled locally
    for free); stage 2 delegates one local draw to that owner.
    """
    if not session.b_setup_done:
        raise NotSetup("run coord_b_setup first")
    enc = session.encoding
    pub = session._b_owner[PUBLIC]
    weights = np.append(session.b_norms**2, pub.norm**2)
    pick = _stage1_pick(weights, rng)
    if pick == session.k:
        local = sq_sample(pub.handle, rng)
        return int(pub.globals[local]), 0
    child = rng.spawn(1)[0]
    ov = session._b_owner[pick]
    local, bits = session._exchange(
        pick, "b_sample", "access",
        req_bits=enc.opcode_bits,
        resp_bits=enc.index_bits(session.m),
        respond=(lambda: int(sq_sample(ov.handle, child))),
    )
    # map the player's local index to the stacked space via the public layout
    return _global_from_local(session._b_route, pick, int(local)), bits


def _global_from_local(route, owner, local: int) -> int:
    starts, ends, owners, locals_ = route
    for s, e, o, loc in zip(starts, ends, owners, locals_):
        if o == owner and loc <= local < loc + (e - s):
            return s + (local - loc)
    raise IndexOutOfRange(f"local index {local} outside owner {owner}'s view")


def coord_b_query(session: Session, j: int):
    """Entry query against the stacked vector; returns (value, bits)."""
    enc = session.encoding
    owner, local = session._route(session._b_route, j)
    if owner == PUBLIC:
        return session._b_owner[PUBLIC].values[local].item(), 0
    ov = session._b_owner[owner]
    payload, bits = session._exchange(
        owner, "b_query", "access",
        req_bits=enc.opcode_bits + enc.index_bits(session.m),
        resp_bits=enc.scalar_bits,
        respond=(lambda: ov.values[local].item()),
    )
    return payload, bits


def coord_a_access(session: Session, request, rng: np.random.Generator | None = None):
    """Serve one matrix access; returns (result, bits).

    Request kinds: "row_norm_sample", ("row_sample", i), ("entry_query", i, j),
    "frobenius_query", ("row_norm_query", i).
    """
    if isinstance(request, str):
        request = (request,)
    kind, args = request[0], request[1:]
    enc = session.encoding

    if kind == "frobenius_query":
        if not session.a_setup_done:
            raise NotSetup("run coord_a_setup first")
        pub = session._a_owner[PUBLIC]
        total = float((session.a_fro_norms**2).sum() + pub.fro**2)
        return math.sqrt(total), 0

    if kind == "row_norm_sample":
        if not session.a_setup_done:
            raise NotSetup("run coord_a_setup first")
        pub = session._a_owner[PUBLIC]
        weights = np.append(session.a_fro_norms**2, pub.fro**2)
        pick = _stage1_pick(weights, rng)
        if pick == session.k:
            local = sq_sample(pub.handle.row_norm_vector, rng)
            return int(pub.globals[local]), 0
        child = rng.spawn(1)[0]
        om = session._a_owner[pick]
        local, bits = session._exchange(
            pick, "a_row_norm_sample", "access",
            req_bits=enc.opcode_bits,
            resp_bits=enc.index_bits(session.a_rows),
            respond=(lambda: int(sq_sample(om.handle.row_norm_vector, child))),
        )
        return _global_from_local(session._a_route, pick, int(local)), bits

    if kind == "row_sample":
        (i,) = args
        owner, local = session._route(session._a_route, i)
        if owner == PUBLIC:
            return sq_sample(sq_row(session._a_owner[PUBLIC].handle, local), rng), 0
        child = rng.spawn(1)[0]
        om = session._a_owner[owner]
        payload, bits = session._exchange(
            owner, "a_row_sample", "access",
            req_bits=enc.opcode_bits + enc.index_bits(session.a_rows),
            resp_bits=enc.index_bits(session.n),
            respond=(lambda: int(sq_sample(sq_row(om.handle, local), child))),
        )
        return int(payload), bits

    if kind == "entry_query":
        i, j = args
        owner, local = session._route(session._a_route, i)
        if not 0 <= j < session.n:
            raise IndexOutOfRange(f"column {j} outside [0, {session.n})")
        if owner == PUBLIC:
            return session._a_owner[PUBLIC].matrix[local, j].item(), 0
        om = session._a_owner[owner]
        payload, bits = session._exchange(
            owner, "a_entry_query", "access",
            req_bits=enc.opcode_bits + enc.index_bits(session.a_rows) + enc.index_bits(session.n),
            resp_bits=enc.scalar_bits,
            respond=(lambda: om.matrix[local, j].item()),
        )
        return payload, bits

    if kind == "row_norm_query":
        (i,) = args
        owner, local = session._route(session._a_route, i)
        if owner == PUBLIC:
            return float(np.linalg.norm(session._a_owner[PUBLIC].matrix[local])), 0
        om = session._a_owner[owner]
        payload, bits = session._exchange(
            owner, "a_row_norm_query", "access",
            req_bits=enc.opcode_bits + enc.index_bits(session.a_rows),
            resp_bits=enc.scalar_bits,
            respond=(lambda: float(np.linalg.norm(om.matrix[local]))),
        )
        return payload, bits

    raise ValueError(f"unknown matrix access kind: {kind!r}")


# --- exact law enumeration ----------------------------------------------------

def protocol_distribution(session: Session, access) -> np.ndarray:
    """Exact induced law of a sampling access, by branch enumeration.

    Expands the two-stage randomness (owner choice, then local draw) into the
    exact probability vector; no RNG is consumed and no bits are charged.  This
    is a verification aid and reads block data directly.
    """
    if isinstance(access, str):
        access = (access,)
    kind, args = access[0], access[1:]

    if kind == "b_sample":
        p = np.zeros(session.m)
        owners = list(range(session.k)) + [PUBLIC]
        weights = np.array([session._b_owner[o].norm ** 2 for o in owners])
        total = weights.sum()
        if total <= 0:
            raise AllZero("stacked vector is identically zero")
        for o, w in zip(owners, weights):
            ov = session._b_owner[o]
            if w > 0:
                p[ov.globals] += (w / total) * exact_distribution(ov.handle)
        return p

    if kind == "row_norm_sample":
        p = np.zeros(session.a_rows)
        owners = list(range(session.k)) + [PUBLIC]
        weights = np.array([session._a_owner[o].fro ** 2 for o in owners])
        total = weights.sum()
        if total <= 0:
            raise AllZero("stacked matrix is identically zero")
        for o, w in zip(owners, weights):
            om = session._a_owner[o]
            if w > 0:
                p[om.globals] += (w / total) * exact_distribution(om.handle.row_norm_vector)
        return p

    if kind == "row_sample":
        (i,) = args
        owner, local = session._route(session._a_route, i)
        return exact_distribution(sq_row(session._a_owner[owner].handle, local))

    if kind == "lincomb_b_dominator":
        (mu,) = args
        views = _lincomb_b_views(session, mu)
        weights = np.array([abs(m_) ** 2 * v.norm**2 for m_, v in views])
        total = weights.sum()
        if total <= 0:
            raise AllZero("all combination shares are zero")
        p = np.zeros(views[0][1].values.size)
        for (m_, v), w in zip(views, weights):
            if w > 0:
                p += (w / total) * exact_distribution(v.handle)
        return p

    if kind == "lincomb_A_row_norm":
        (lambdas,) = args
        views = _lincomb_a_views(session, lambdas)
        weights = np.array([abs(l_) ** 2 * v.fro**2 for l_, v in views])
        total = weights.sum()
        if total <= 0:
            raise AllZero("all combination shares are zero")
        p = np.zeros(views[0][1].matrix.shape[0])
        for (l_, v), w in zip(views, weights):
            if w > 0:
                p += (w / total) * exact_distribution(v.handle.row_norm_vector)
        return p

    if kind == "lincomb_A_row":
        lambdas, i = args
        views = _lincomb_a_views(session, lambdas)
        weights = np.array(
            [abs(l_) ** 2 * float(np.linalg.norm(v.matrix[i]) ** 2) for l_, v in views]
        )
        total = weights.sum()
        if total <= 0:
            raise AllZero(f"dominator row {i} is identically zero")
        p = np.zeros(session.n)
        for (l_, v), w in zip(views, weights):
            if w > 0:
                p += (w / total) * exact_distribution(sq_row(v.handle, i))
        return p

    raise ValueError(f"unknown access kind: {kind!r}")


# --- linear-combination access -------------------------------------------------

def _lincomb_b_views(session: Session, mu):
    mu = np.asarray(mu)
    if mu.shape != (session.k,):
        raise DimensionMismatch(f"need {session.k} coefficients, got {mu.shape}")
    views = []
    size = None
    for i in range(session.k):
        ov = session._b_owner[i]
        if ov is None or ov.values is None or ov.size == 0:
            raise DimensionMismatch(f"player {i} holds no vector share")
        if size is None:
            size = ov.size
        elif ov.size != size:
            raise DimensionMismatch("vector shares differ in length")
        views.append((complex(mu[i]) if np.iscomplexobj(mu) else float(mu[i]), ov))
    return views


def _lincomb_a_views(session: Session, lambdas):
    lam = np.asarray(lambdas)
    if lam.shape != (session.k,):
        raise DimensionMismatch(f"need {session.k} coefficients, got {lam.shape}")
    views = []
    shape = None
    for i in range(session.k):
        om = session._a_owner[i]
        if om is None or om.matrix is None or om.rows == 0:
            raise DimensionMismatch(f"player {i} holds no matrix share")
        if shape is None:
            shape = om.matrix.shape
        elif om.matrix.shape != shape:
            raise DimensionMismatch("matrix shares differ in shape")
        views.append((complex(lam[i]) if np.iscomplexobj(lam) else float(lam[i]), om))
    return views


def lincomb_b_phi(session: Session, mu) -> float:
    """Exact oversampling ratio phi for the combined vector (simulation-side)."""
    views = _lincomb_b_views(session, mu)
    combined = sum(m_ * v.values for m_, v in views)
    c_norm2 = float(np.linalg.norm(combined) ** 2)
    if c_norm2 <= CANCELLATION_TOL**2:
        raise Cancellation("combination cancels below tolerance")
    share = sum(abs(m_) ** 2 * v.norm**2 for m_, v in views)
    return session.k * share / c_norm2


def lincomb_a_phi(session: Session, lambdas) -> float:
    """Exact oversampling ratio phi for the combined matrix (simulation-side)."""
    views = _lincomb_a_views(session, lambdas)
    combined = sum(l_ * v.matrix for l_, v in views)
    c_norm2 = float(np.linalg.norm(combined) ** 2)
    if c_norm2 <= CANCELLATION_TOL**2:
        raise Cancellation("combination cancels below tolerance")
    share = sum(abs(l_) ** 2 * v.fro**2 for l_, v in views)
    return session.k * share / c_norm2


def _lincomb_b_fan_query(session: Session, j: int):
    """Query all k shares at j (always fans out, even for zero coefficients)."""
    enc = session.encoding
    size = session._lincomb_b_size()
    if not 0 <= j < size:
        raise IndexOutOfRange(f"index {j} outside [0, {size})")
    bits = 0
    values = []
    for i in range(session.k):
        v = None if session.replaying else session._b_owner[i]
        payload, cost = session._exchange(
            i, "lincomb_b_query", "access",
            req_bits=enc.opcode_bits + enc.index_bits(size),
            resp_bits=enc.scalar_bits,
            respond=(lambda v=v: v.values[j].item()),
        )
        values.append(payload)
        bits += cost
    return values, bits


def lincomb_b_access(session: Session, mu, request, rng: np.random.Generator | None = None):
    """Serve one access against b = sum_i mu_i b^(i); returns (result, bits).

    Request kinds: ("query", j), ("dominator_query", j), "dominator_sample",
    "dominator_norm", ("sq_sample_via_rejection"[, delta]),
    ("norm_estimate", eps, delta).  Queries fan out to all k players; samples
    go through the dominating vector with entries sqrt(k sum_i |mu_i b_j^(i)|^2).
    """
    if isinstance(request, str):
        request = (request,)
    kind, args = request[0], request[1:]
    enc = session.encoding
    mu_arr = np.asarray(mu)
    if not session.b_setup_done:
        raise NotSetup("run coord_b_setup first")
    if mu_arr.shape != (session.k,):
        raise DimensionMismatch(f"need {session.k} coefficients, got {mu_arr.shape}")
    size = session._lincomb_b_size()

    def dominator_weights():
        # coordinator-known: |mu_i|^2 * (norm received at setup)^2
        return np.abs(mu_arr) ** 2 * session.b_norms**2

    def dominator_sample(rng):
        weights = dominator_weights()
        pick = _stage1_pick(weights, rng)
        child = rng.spawn(1)[0]
        ov = None if session.replaying else session._b_owner[pick]
        payload, cost = session._exchange(
            pick, "lincomb_b_sample", "access",
            req_bits=enc.opcode_bits,
            resp_bits=enc.index_bits(size),
            respond=(lambda: int(sq_sample(ov.handle, child))),
        )
        return int(payload), cost

    def ratio_at(j):
        values, cost = _lincomb_b_fan_query(session, j)
        combined = sum(m_ * v for m_, v in zip(mu_arr, values))
        dom_sq = session.k * sum(abs(m_ * v) ** 2 for m_, v in zip(mu_arr, values))
        return combined, dom_sq, cost

    if kind == "query":
        (j,) = args
        values, bits = _lincomb_b_fan_query(session, j)
        return sum(m_ * v for m_, v in zip(mu_arr, values)), bits

    if kind == "dominator_query":
        (j,) = args
        values, bits = _lincomb_b_fan_query(session, j)
        return math.sqrt(session.k * sum(abs(m_ * v) ** 2 for m_, v in zip(mu_arr, values))), bits

    if kind == "dominator_norm":
        return math.sqrt(session.k * float(dominator_weights().sum())), 0

    if kind == "dominator_sample":
        return dominator_sample(rng)

    if kind == "sq_sample_via_rejection":
        delta = args[0] if args else DEFAULT_REJECTION_DELTA
        phi = session._annotate("phi_b", lambda: lincomb_b_phi(session, mu_arr))
        cap = rejection_round_cap(phi, delta)
        bits = 0
        for rounds in range(1, cap + 1):
            j, cost = dominator_sample(rng)
            bits += cost
            combined, dom_sq, cost = ratio_at(j)
            bits += cost
            if dom_sq <= 0:
                continue
            if rng.random() < abs(combined) ** 2 / dom_sq:
                return RejectionSample(index=j, rounds=rounds), bits
        raise Timeout(f"no acceptance within {cap} rounds (phi={phi:.3g})")

    if kind == "norm_estimate":
        eps, delta = args
        phi = session._annotate("phi_b", lambda: lincomb_b_phi(session, mu_arr))
        n_draws = max(1, int(math.ceil(4.0 * phi * math.log(1.0 / delta) / eps**2)))
        bits = 0
        total_ratio = 0.0
        for _ in range(n_draws):
            j, cost = dominator_sample(rng)
            bits += cost
            combined, dom_sq, cost = ratio_at(j)
            bits += cost
            if dom_sq > 0:
                total_ratio += abs(combined) ** 2 / dom_sq
        dom_norm = math.sqrt(session.k * float(dominator_weights().sum()))
        return dom_norm * math.sqrt(total_ratio / n_draws), bits

    raise ValueError(f"unknown combination access kind: {kind!r}")


def lincomb_a_access(session: Session, lambdas, request, rng: np.random.Generator | None = None):
    """Serve one access against A = sum_t lambda_t A^(t); returns (result, bits).

    Request kinds: ("query", i, j), ("dominator_query", i, j),
    "dominator_fro_norm", ("dominator_row_norm_query", i),
    "dominator_row_norm_sample", ("dominator_row_sample", i),
    ("sq_row_sample_via_rejection", i[, delta]).
    """
    if isinstance(request, str):
        request = (request,)
    kind, args = request[0], request[1:]
    enc = session.encoding
    lam = np.asarray(lambdas)
    if not session.a_setup_done:
        raise NotSetup("run coord_a_setup first")
    if lam.shape != (session.k,):
        raise DimensionMismatch(f"need {session.k} coefficients, got {lam.shape}")
    rows, cols = session._lincomb_a_shape()

    def check_row(i):
        if not 0 <= i < rows:
            raise IndexOutOfRange(f"row {i} outside [0, {rows})")

    def fan_entry(i, j):
        if not 0 <= j < cols:
            raise IndexOutOfRange(f"column {j} outside [0, {cols})")
        bits = 0
        values = []
        for t in range(session.k):
            om = None if session.replaying else session._a_owner[t]
            payload, cost = session._exchange(
                t, "lincomb_a_query", "access",
                req_bits=enc.opcode_bits + enc.index_bits(rows) + enc.index_bits(cols),
                resp_bits=enc.scalar_bits,
                respond=(lambda om=om: om.matrix[i, j].item()),
            )
            values.append(payload)
            bits += cost
        return values, bits

    def fan_row_norms(i):
        bits = 0
        norms = []
        for t in range(session.k):
            om = None if session.replaying else session._a_owner[t]
            payload, cost = session._exchange(
                t, "lincomb_a_row_norm", "access",
                req_bits=enc.opcode_bits + enc.index_bits(rows),
                resp_bits=enc.scalar_bits,
                respond=(lambda om=om: float(np.linalg.norm(om.matrix[i]))),
            )
            norms.append(float(payload))
            bits += cost
        return norms, bits

    def row_sample(i, weights, rng):
        pick = _stage1_pick(weights, rng)
        child = rng.spawn(1)[0]
        om = None if session.replaying else session._a_owner[pick]
        payload, cost = session._exchange(
            pick, "lincomb_a_row_sample", "access",
            req_bits=enc.opcode_bits + enc.index_bits(rows),
            resp_bits=enc.index_bits(cols),
            respond=(lambda: int(sq_sample(sq_row(om.handle, i), child))),
        )
        return int(payload), cost

    if kind == "query":
        i, j = args
        check_row(i)
        values, bits = fan_entry(i, j)
        return sum(l_ * v for l_, v in zip(lam, values)), bits

    if kind == "dominator_query":
        i, j = args
        check_row(i)
        values, bits = fan_entry(i, j)
        return math.sqrt(session.k * sum(abs(l_ * v) ** 2 for l_, v in zip(lam, values))), bits

    if kind == "dominator_fro_norm":
        return math.sqrt(session.k * float((np.abs(lam) ** 2 * session.a_fro_norms**2).sum())), 0

    if kind == "dominator_row_norm_query":
        (i,) = args
        check_row(i)
        norms, bits = fan_row_norms(i)
        return math.sqrt(session.k * sum(abs(l_) ** 2 * r**2 for l_, r in zip(lam, norms))), bits

    if kind == "dominator_row_norm_sample":
        weights = np.abs(lam) ** 2 * session.a_fro_norms**2
        pick = _stage1_pick(weights, rng)
        child = rng.spawn(1)[0]
        om = None if session.replaying else session._a_owner[pick]
        payload, bits = session._exchange(
            pick, "lincomb_a_row_norm_sample", "access",
            req_bits=enc.opcode_bits,
            resp_bits=enc.index_bits(rows),
            respond=(lambda: int(sq_sample(om.handle.row_norm_vector, child))),
        )
        return int(payload), bits

    if kind == "dominator_row_sample":
        (i,) = args
        check_row(i)
        norms, bits = fan_row_norms(i)
        weights = np.abs(lam) ** 2 * np.asarray(norms) ** 2
        j, cost = row_sample(i, weights, rng)
        return j, bits + cost

    if kind == "sq_row_sample_via_rejection":
        i = args[0]
        check_row(i)
        delta = args[1] if len(args) > 1 else DEFAULT_REJECTION_DELTA

        def phi_row():
            views = _lincomb_a_views(session, lam)
            combined = sum(l_ * v.matrix[i] for l_, v in views)
            c = float(np.linalg.norm(combined) ** 2)
            if c <= CANCELLATION_TOL**2:
                raise Cancellation(f"combined row {i} cancels below tolerance")
            dom = session.k * sum(abs(l_) ** 2 * float(np.linalg.norm(v.matrix[i]) ** 2) for l_, v in views)
            return dom / c

        phi = session._annotate("phi_row", phi_row)
        cap = rejection_round_cap(phi, delta)
        bits = 0
        for rounds in range(1, cap + 1):
            norms, cost = fan_row_norms(i)
            bits += cost
            weights = np.abs(lam) ** 2 * np.asarray(norms) ** 2
            j, cost = row_sample(i, weights, rng)
            bits += cost
            values, cost = fan_entry(i, j)
            bits += cost
            combined = sum(l_ * v for l_, v in zip(lam, values))
            dom_sq = session.k * sum(abs(l_ * v) ** 2 for l_, v in zip(lam, values))
            if dom_sq <= 0:
                continue
            if rng.random() < abs(combined) ** 2 / dom_sq:
                return RejectionSample(index=j, rounds=rounds), bits
        raise Timeout(f"no acceptance within {cap} rounds (phi={phi:.3g})")

    raise ValueError(f"unknown combination access kind: {kind!r}")


# --- reporting -----------------------------------------------------------------

@dataclass(frozen=True)
class MeterReport:
    total_bits: int
    n_messages: int
    n_rounds: int
    bits_by_kind: dict
    bits_by_phase: dict
    messages_by_kind: dict


def meter_report(session: Session) -> MeterReport:
    """Aggregate the transcript: totals overall, by message kind, and by phase."""
    by_kind: dict = {}
    by_phase: dict = {}
    count_kind: dict = {}
    rounds = 0
    messages = session.meter.messages
    for msg in messages:
        by_kind[msg.kind] = by_kind.get(msg.kind, 0) + msg.bits
        by_phase[msg.phase] = by_phase.get(msg.phase, 0) + msg.bits
        count_kind[msg.kind] = count_kind.get(msg.kind, 0) + 1
        rounds = max(rounds, msg.round)
    return MeterReport(
        total_bits=session.meter.total_bits,
        n_messages=len(messages),
        n_rounds=rounds,
        bits_by_kind=dict(sorted(by_kind.items())),
        bits_by_phase=dict(sorted(by_phase.items())),
        messages_by_kind=dict(sorted(count_kind.items())),
    )


def export_transcript_jsonl(session: Session, path) -> None:
    """Write one JSON object per message: round, from, to, kind, bits."""
    with open(path, "w") as fh:
        for msg in session.meter.messages:
            fh.write(json.dumps(
                {"round": msg.round, "from": msg.sender, "to": msg.receiver,
                 "kind": msg.kind, "bits": msg.bits},
                sort_keys=True,
            ))
            fh.write("\n")


def export_summary_csv(session: Session, path) -> None:
    """Write per-kind totals: kind, phase, messages, bits (sorted, stable)."""
    rows: dict = {}
    for msg in session.meter.messages:
        key = (msg.kind, msg.phase)
        msgs, bits = rows.get(key, (0, 0))
        rows[key] = (msgs + 1, bits + msg.bits)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "phase", "messages", "bits"])
        for (kind, phase), (msgs, bits) in sorted(rows.items()):
            writer.writerow([kind, phase, msgs, bits])
