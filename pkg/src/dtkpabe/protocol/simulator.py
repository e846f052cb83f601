"""Deterministic discrete-event run of one transaction period.

Virtual time is integer microseconds. At t=0 every registered RU picks s_i and
enrolls a CID. Arrivals queue until the k-th one, which triggers the sharing
round among the queued RUs, their batch encryption and the CA's interpolation.
Later arrivals (up to and including TP) take the delayed path. AO requests can
fire at any time and decrypt whatever the network holds at that moment.

Events with equal timestamps run in the order: arrivals, period close, AO
requests; ties within a class keep input order.
"""
from __future__ import annotations

import heapq
import json
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from ..group import Element, OpCounter, PairingGroup, get_group
from ..kpabe import AttributeUniverse, SystemParams
from ..payload import DEFAULT_MAX_PAYLOAD
from ..policy import PolicyError
from ..serialize import dump_protocol_ct
from ..sharing import ShareRound, gen_contribution
from .messages import FinishedCiphertext
from .roles import (AgencyOperator, CentralAggregator, CentralDispatcher,
                    ResidentialUnit, TrustedAuthority)

US = 1_000_000

_ARRIVAL, _CLOSE, _REQUEST = 0, 1, 2


def to_us(seconds: float) -> int:
    return round(seconds * US)


@dataclass(frozen=True)
class TransactionConfig:
    n: int
    k: int
    tp: float                      # seconds
    seed: int
    universe: tuple[str, ...]
    area: str = "area-1"
    group: str = "bls12-381"
    max_payload: int = DEFAULT_MAX_PAYLOAD

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))
        if not 0 < self.k <= self.n:
            raise ValueError(f"threshold must satisfy 0 < k <= n (k={self.k}, n={self.n})")
        if self.tp <= 0:
            raise ValueError("transaction period must be positive")

    @property
    def tp_us(self) -> int:
        return to_us(self.tp)

    def ru_ids(self) -> list[str]:
        return [f"RU{i}" for i in range(1, self.n + 1)]


@dataclass(frozen=True)
class Arrival:
    time: float
    ru: str
    attributes: tuple[str, ...]
    payload: bytes


@dataclass(frozen=True)
class AODefinition:
    name: str
    policy: object                 # JSON policy document (str or mapping)
    decrypt_times: tuple[float, ...]


@dataclass
class Delivery:
    ao: str
    t_us: int
    available: int
    authorized: bool
    payloads: dict[str, bytes]     # RU id -> recovered payload
    failed: list[str]
    f_root: Element | None


@dataclass
class Transcript:
    records: list[dict] = field(default_factory=list)
    deliveries: list[Delivery] = field(default_factory=list)
    published: list[tuple[str, FinishedCiphertext]] = field(default_factory=list)
    accepted: dict[str, bytes] = field(default_factory=dict)
    rejected: list[str] = field(default_factory=list)
    finalized: bool = False
    pk: SystemParams | None = None
    parties: dict[str, object] = field(default_factory=dict)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
                       for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    def events(self, event: str) -> list[dict]:
        return [r for r in self.records if r["event"] == event]

    def for_ao(self, name: str) -> list[Delivery]:
        return [d for d in self.deliveries if d.ao == name]

    def view(self, role: str) -> list[bytes]:
        return list(self.parties[role].view)


class _Run:
    def __init__(self, cfg: TransactionConfig, authority: TrustedAuthority, rng: random.Random):
        self.cfg = cfg
        self.auth = authority
        self.group: PairingGroup = authority.group
        self.pk = authority.pk
        self.rng = rng
        self.t = Transcript(pk=self.pk)
        self.now = 0

    def record(self, role: str, actor: str, event: str, ops: OpCounter | None = None, **info) -> None:
        rec = {"seq": len(self.t.records), "t_us": self.now, "role": role, "actor": actor,
               "event": event,
               "ops": {k: v for k, v in (ops or OpCounter()).as_dict().items()}}
        rec.update(info)
        self.t.records.append(rec)

    # -- set-up ------------------------------------------------------------
    def setup(self, aos: Sequence[AODefinition]) -> None:
        cfg, g = self.cfg, self.group
        area_key = self.auth.area_key(cfg.area)
        self.record("authority", "TA", "provision-area-key", area=cfg.area,
                    recipients=["CD"] + cfg.ru_ids())
        self.ca = CentralAggregator(cfg.k)
        self.cd = CentralDispatcher(self.pk, {cfg.area: area_key})
        self.aos: dict[str, AgencyOperator] = {}
        for ao in aos:
            with g.counting() as ops:
                key = self.auth.keygen(ao.policy)
            self.aos[ao.name] = AgencyOperator(ao.name, key)
            self.record("authority", "TA", "keygen", ops, ao=ao.name, leaves=key.tree.leaf_count)

        self.round = ShareRound(g, cfg.k, round_id=f"{cfg.area}/{cfg.seed}")
        self.rus: dict[str, ResidentialUnit] = {}
        for pid in cfg.ru_ids():
            ru = ResidentialUnit(pid, self.pk, area_key)
            with g.counting() as ops:
                y_prime = ru.pick_secret(self.rng)
                ru.cid = self.round.register_fresh(pid, area_key, y_prime, self.rng)
            self.ca.register(ru.cid)
            self.rus[pid] = ru
            self.record("RU", pid, "register-cid", ops, cid=ru.cid.short())

        self.cid_owner = {ru.cid.x: pid for pid, ru in self.rus.items()}
        self.t.parties.update({"CA": self.ca, "CD": self.cd, **self.aos, **self.rus})
        self.queue: list[tuple[ResidentialUnit, Arrival]] = []
        self.arrived: set[str] = set()
        self.gamma: frozenset[int] | None = None

    # -- events ------------------------------------------------------------
    def arrival(self, arr: Arrival) -> None:
        cfg = self.cfg
        reason = None
        gamma = None
        if self.now > cfg.tp_us:
            reason = "deadline"
        elif arr.ru not in self.rus:
            reason = "unregistered"
        elif arr.ru in self.arrived:
            reason = "duplicate"
        else:
            try:
                gamma = self.pk.universe.ids_of(arr.attributes)
            except PolicyError:
                reason = "unknown-attribute"
            else:
                if not gamma:
                    reason = "empty-attributes"
                elif self.gamma is not None and gamma != self.gamma:
                    reason = "gamma-mismatch"
        if reason is not None:
            self.t.rejected.append(arr.ru)
            self.record("CA", "CA", "reject", reason=reason, ru=arr.ru)
            return
        if self.gamma is None:
            self.gamma = gamma
        self.arrived.add(arr.ru)
        ru = self.rus[arr.ru]
        if self.ca.cached_gt is None:
            self.queue.append((ru, arr))
            self.record("RU", ru.pid, "ready", queued=len(self.queue))
            if len(self.queue) == cfg.k:
                self.batch()
        else:
            self.delayed(ru, arr)

    def batch(self) -> None:
        g, p = self.group, self.group.order
        contributors = [ru for ru, _ in self.queue]
        self.round.begin([ru.pid for ru in contributors])
        roster = list(self.round.roster.items())
        for ru in contributors:
            with g.counting() as ops:
                contrib = gen_contribution(self.cfg.k, self.rng, p, secret=ru.s_i)
                for pid, cid in roster:
                    self.round.deliver(ru.pid, pid, contrib.at(cid.x, p))
            self.record("RU", ru.pid, "distribute-shares", ops, messages=len(roster))
        for pid, ru in self.rus.items():
            ru.h = self.round.aggregate(pid)
        self.round.freeze()
        self.record("RU", "*", "aggregate-h", holders=len(self.rus))

        for ru, arr in self.queue:
            self.submit(ru, arr, is_batch=True)
        self.queue = []
        self.t.finalized = True

    def delayed(self, ru: ResidentialUnit, arr: Arrival) -> None:
        self.submit(ru, arr, is_batch=False)

    def submit(self, ru: ResidentialUnit, arr: Arrival, is_batch: bool) -> None:
        g = self.group
        with g.counting() as ops:
            semi = ru.encrypt(self.gamma, arr.payload, is_batch, self.rng, self.cfg.max_payload)
        self.record("RU", ru.pid, "encrypt-semi", ops, batch=is_batch, cid=ru.cid.short())
        self.ca.view.append(dump_protocol_ct(semi, self.pk))
        with g.counting() as ops:
            finished = self.ca.receive(semi)
        if is_batch and not finished:
            self.record("CA", "CA", "collect", ops, cid=ru.cid.short(), pending=len(self.ca.pending))
            self.t.accepted[ru.pid] = arr.payload
            return
        event = "finalize-batch" if is_batch else "finalize-delayed"
        if is_batch:
            self.ca.view.append(self.ca.cached_gt.to_bytes())
        self.t.accepted[ru.pid] = arr.payload
        for ct in finished:
            self.ca.view.append(dump_protocol_ct(ct, self.pk))
            self.t.published.append((self.cid_owner[ct.cid.x], ct))
        self.record("CA", "CA", event, ops, published=[c.cid.short() for c in finished])

    def close(self) -> None:
        if self.ca.cached_gt is None:
            self.record("CA", "CA", "stall", queued=len(self.queue), needed=self.cfg.k)
        self.record("CA", "CA", "period-closed", published=len(self.t.published))

    def request(self, ao: AgencyOperator) -> None:
        g = self.group
        cts = [ct for _, ct in self.t.published]
        if not cts:
            self.record("AO", ao.name, "ao-request", available=0)
            self.t.deliveries.append(Delivery(ao.name, self.now, 0, False, {}, [], None))
            return
        with g.counting() as ops:
            pre = self.cd.predecrypt(self.cfg.area, cts)
        self.record("CD", "CD", "cd-predecrypt", ops, count=len(pre))
        with g.counting() as ops:
            result = ao.decrypt(pre, self.cfg.k)
        owners = [self.cid_owner[c.cid.x] for c in pre]
        if result is None:
            self.record("AO", ao.name, "ao-decrypt", ops, available=len(pre), authorized=False,
                        recovered=[])
            self.t.deliveries.append(Delivery(ao.name, self.now, len(pre), False, {}, [], None))
            return
        payloads = {o: r for o, r in zip(owners, result) if r is not None}
        failed = [o for o, r in zip(owners, result) if r is None]
        self.record("AO", ao.name, "ao-decrypt", ops, available=len(pre), authorized=True,
                    recovered=sorted(payloads), failed=failed)
        self.t.deliveries.append(Delivery(ao.name, self.now, len(pre), True, payloads, failed,
                                          ao.last_f_root))

    # -- driver ------------------------------------------------------------
    def run(self, arrivals: Sequence[Arrival], aos: Sequence[AODefinition]) -> Transcript:
        times = [a.time for a in arrivals]
        if times != sorted(times):
            raise ValueError("arrivals must be sorted by time")
        self.setup(aos)
        heap: list[tuple[int, int, int, object]] = []
        seq = 0
        for arr in arrivals:
            heap.append((to_us(arr.time), _ARRIVAL, seq, arr))
            seq += 1
        heap.append((self.cfg.tp_us, _CLOSE, seq, None))
        seq += 1
        for ao in aos:
            for t in ao.decrypt_times:
                heap.append((to_us(t), _REQUEST, seq, self.aos[ao.name]))
                seq += 1
        heapq.heapify(heap)
        while heap:
            self.now, kind, _, item = heapq.heappop(heap)
            if kind == _ARRIVAL:
                self.arrival(item)
            elif kind == _CLOSE:
                self.close()
            else:
                self.request(item)
        return self.t


def run_scenario(cfg: TransactionConfig, arrivals: Iterable[Arrival],
                 aos: Iterable[AODefinition] = (),
                 authority: TrustedAuthority | None = None) -> Transcript:
    """Simulate one transaction period. Same config and seed give the same transcript."""
    rng = random.Random(cfg.seed)
    if authority is None:
        authority = TrustedAuthority(get_group(cfg.group), AttributeUniverse(cfg.universe), rng)
    elif tuple(authority.universe.labels) != cfg.universe:
        raise ValueError("authority universe differs from the scenario universe")
    return _Run(cfg, authority, rng).run(list(arrivals), list(aos))


def summarize(transcript: Transcript) -> Mapping[str, dict[str, int]]:
    """Total operation counts per role."""
    totals: dict[str, OpCounter] = {}
    for rec in transcript.records:
        totals.setdefault(rec["role"], OpCounter())
        totals[rec["role"]] = totals[rec["role"]] + OpCounter(**rec["ops"])
    return {role: c.as_dict() for role, c in sorted(totals.items())}
