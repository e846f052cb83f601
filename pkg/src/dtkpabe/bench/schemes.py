"""The two baseline upload schemes and the proposed one, instrumented.

All timings are integer nanoseconds from ``time.perf_counter_ns``. Component
timers are aggregates over every party of a role (t RUs encrypt one after the
other on this machine); ``*_party`` columns divide RU work by t to give the
parallel view in which each RU runs on its own meter.

Component map:

    SCHEME1   ET = CA encrypts the concatenated t*m bytes once; DT = one decrypt
    SCHEME2   ET = t independent encryptions;   DT = t independent decryptions
    PROPOSED  ST = CID creation + sharing; ET = t RU encryptions; DST_CA = CA
              finalization; DST_CD = CD pre-decryption + T_u^s interpolation;
              DT = one DecryptNode + t unblindings
TP is never slept: it is a configured constant added to the totals.
"""
from __future__ import annotations

import enum
import gc
import random
import statistics
import time
from dataclasses import asdict, dataclass, field, fields, replace

from ..group import OpCounter, PairingGroup, get_group
from ..interp import interpolate_exponent_at_zero
from ..kpabe import AttributeUniverse, Authority, gpsw_decrypt, gpsw_encrypt
from ..payload import decode_payload, encode_payload
from ..policy import decrypt_node
from ..protocol.roles import ca_finalize_batch, ca_finalize_delayed, cd_predecrypt, ru_encrypt, unblind_all
from ..sharing import ShareRound, gen_contribution, run_sharing

KB = 1024


class SchemeKind(str, enum.Enum):
    SCHEME1 = "1"
    SCHEME2 = "2"
    PROPOSED = "proposed"

    @classmethod
    def parse(cls, text: str) -> SchemeKind:
        for kind in cls:
            if text.lower() in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"unknown scheme {text!r}")


@dataclass(frozen=True)
class BenchParams:
    t: int                 # uploading RUs
    msg_size: int          # bytes per RU
    attrs: int             # |gamma|; the AO policy is the AND of all of them
    k: int | None = None   # threshold; None means k = t
    tp: float = 0.0        # transaction period in seconds (analytic)
    seed: int = 0
    group: str = "bls12-381"

    @property
    def threshold(self) -> int:
        return self.t if self.k is None else self.k

    def check(self, kind: SchemeKind) -> None:
        if self.t < 0 or self.msg_size < 0 or self.attrs < 1 or self.tp < 0:
            raise ValueError(f"invalid bench parameters {self}")
        if kind is SchemeKind.PROPOSED:
            if self.t < 1:
                raise ValueError("the proposed scheme needs at least one uploading RU")
            if not 1 <= self.threshold <= self.t:
                raise ValueError(f"infeasible threshold: k={self.threshold} > t={self.t}")


@dataclass
class CostModel:
    """One measured execution (or the median repetition of several)."""

    scheme: str
    t: int
    k: int
    msg_size: int
    attrs: int
    seed: int
    rep: int = 0
    tp_ns: int = 0
    tpk_ns: int = 0
    st_ns: int = 0
    et_ns: int = 0
    dst_ca_ns: int = 0
    dst_cd_ns: int = 0
    dt_ns: int = 0
    enc_total_ns: int = 0      # outer timer around the whole encryption side
    dec_total_ns: int = 0      # outer timer around the whole decryption side
    enc_pairings: int = 0
    enc_exps: int = 0
    enc_interps: int = 0
    dec_pairings: int = 0
    dec_exps: int = 0
    dec_interps: int = 0
    decrypt_nodes: int = 0
    abe_decrypts: int = 0
    recovered: int = 0

    # -- cost model --------------------------------------------------------------
    @property
    def enc_components_ns(self) -> int:
        return self.st_ns + self.et_ns + self.dst_ca_ns

    @property
    def dec_components_ns(self) -> int:
        return self.dst_cd_ns + self.dt_ns

    @property
    def enc_party_ns(self) -> int:
        """Critical-path encryption time when every RU has its own CPU."""
        if self.scheme == SchemeKind.SCHEME1.value:
            return self.et_ns
        if self.t == 0:
            return 0
        return (self.st_ns + self.et_ns) // self.t + self.dst_ca_ns

    @property
    def dec_party_ns(self) -> int:
        # CD then AO, sequential; a single AO does all its decryptions
        return self.dec_components_ns

    @property
    def T_ns(self) -> int:
        """T1 = TP + ET_{t.m};  T2 = TP;  T3 = TP_k + ST + ET_m + DST_CA."""
        if self.scheme == SchemeKind.SCHEME1.value:
            return self.tp_ns + self.et_ns
        if self.scheme == SchemeKind.SCHEME2.value:
            return self.tp_ns
        return self.tpk_ns + self.enc_party_ns

    @property
    def T_prime_ns(self) -> int:
        """T1' = DT_{t.m};  T2' = t DT_m;  T3' = DST_CD + DT."""
        return self.dec_components_ns

    def consistency(self) -> tuple[float, float]:
        """Relative gap between outer totals and component sums (enc, dec)."""
        def gap(total, parts):
            return abs(total - parts) / total if total else float(parts != 0)
        return gap(self.enc_total_ns, self.enc_components_ns), gap(self.dec_total_ns, self.dec_components_ns)

    # -- CSV -------------------------------------------------------------------
    def to_row(self) -> dict[str, object]:
        row = asdict(self)
        row.update(enc_party_ns=self.enc_party_ns, dec_party_ns=self.dec_party_ns,
                   T_ns=self.T_ns, T_prime_ns=self.T_prime_ns)
        return row

    @classmethod
    def from_row(cls, row) -> CostModel:
        kw = {}
        for f in fields(cls):
            kw[f.name] = row[f.name] if f.name == "scheme" else int(row[f.name])
        return cls(**kw)


ROW_FIELDS = [f.name for f in fields(CostModel)] + ["enc_party_ns", "dec_party_ns", "T_ns", "T_prime_ns"]
_DEC_FIELDS = ("dst_cd_ns", "dt_ns", "dec_total_ns", "dec_pairings", "dec_exps", "dec_interps",
               "decrypt_nodes", "abe_decrypts", "recovered")


def median_cost(samples: list[CostModel]) -> CostModel:
    """Median repetition, picked separately for the encryption and decryption sides.

    Whole repetitions are kept so that the components still add up to the
    outer total; a per-field median would mix timings from different runs.
    """
    if not samples:
        raise ValueError("no samples")
    mid = (len(samples) - 1) // 2
    enc = sorted(samples, key=lambda s: s.enc_total_ns)[mid]
    dec = sorted(samples, key=lambda s: s.dec_total_ns)[mid]
    return replace(enc, rep=-1, **{name: getattr(dec, name) for name in _DEC_FIELDS})


# -- fixtures shared by the repetitions of one cell --------------------------

@dataclass
class _Fixture:
    group: PairingGroup
    universe: AttributeUniverse
    authority: Authority
    gamma: frozenset[int]
    key: object
    payloads: list[bytes]
    area_key: bytes
    extra: dict = field(default_factory=dict)


def _fixture(params: BenchParams) -> _Fixture:
    group = get_group(params.group)
    rng = random.Random(params.seed)
    universe = AttributeUniverse(tuple(f"attr{i}" for i in range(params.attrs)))
    authority = Authority(group, universe, rng)
    policy = {"and": [{"attr": a} for a in universe.labels]} if params.attrs > 1 else {"attr": universe.labels[0]}
    key = authority.keygen(policy)
    payloads = [rng.randbytes(params.msg_size) for _ in range(params.t)]
    return _Fixture(group, universe, authority, frozenset(universe.ids), key, payloads, rng.randbytes(32))


class _Clock:
    def __init__(self):
        self.total = 0
        self._t0 = 0

    def __enter__(self):
        self._t0 = time.perf_counter_ns()
        return self

    def __exit__(self, *exc):
        self.total += time.perf_counter_ns() - self._t0
        return False


def _ops(c: OpCounter) -> tuple[int, int, int]:
    return c.pairings, c.exponentiations, c.interpolations


# -- one execution per scheme ------------------------------------------------

def _scheme1(fx: _Fixture, params: BenchParams, rng: random.Random, cm: CostModel) -> None:
    pk = fx.authority.pk
    et, dt = _Clock(), _Clock()
    t0 = time.perf_counter_ns()
    with fx.group.counting() as enc_ops, et:
        if params.t:
            m, wrapped = encode_payload(fx.group, b"".join(fx.payloads), rng, None)
            ct = gpsw_encrypt(pk, fx.gamma, m, rng)
    cm.enc_total_ns = time.perf_counter_ns() - t0
    t0 = time.perf_counter_ns()
    with fx.group.counting() as dec_ops, dt:
        if params.t:
            blob = decode_payload(gpsw_decrypt(fx.key, ct), wrapped)
            cm.abe_decrypts = 1
    cm.dec_total_ns = time.perf_counter_ns() - t0
    if params.t:
        cm.recovered = sum(blob[i * params.msg_size:(i + 1) * params.msg_size] == p
                           for i, p in enumerate(fx.payloads))
    cm.et_ns, cm.dt_ns = et.total, dt.total
    cm.enc_pairings, cm.enc_exps, cm.enc_interps = _ops(enc_ops)
    cm.dec_pairings, cm.dec_exps, cm.dec_interps = _ops(dec_ops)
    cm.decrypt_nodes = dec_ops.decrypt_nodes


def _scheme2(fx: _Fixture, params: BenchParams, rng: random.Random, cm: CostModel) -> None:
    pk = fx.authority.pk
    et, dt = _Clock(), _Clock()
    cts = []
    t0 = time.perf_counter_ns()
    with fx.group.counting() as enc_ops:
        for data in fx.payloads:
            with et:
                m, wrapped = encode_payload(fx.group, data, rng)
                cts.append((gpsw_encrypt(pk, fx.gamma, m, rng), wrapped))
    cm.enc_total_ns = time.perf_counter_ns() - t0
    out = []
    t0 = time.perf_counter_ns()
    with fx.group.counting() as dec_ops:
        for ct, wrapped in cts:
            with dt:
                out.append(decode_payload(gpsw_decrypt(fx.key, ct), wrapped))
    cm.dec_total_ns = time.perf_counter_ns() - t0
    cm.abe_decrypts = len(cts)
    cm.recovered = sum(a == b for a, b in zip(out, fx.payloads))
    cm.et_ns, cm.dt_ns = et.total, dt.total
    cm.enc_pairings, cm.enc_exps, cm.enc_interps = _ops(enc_ops)
    cm.dec_pairings, cm.dec_exps, cm.dec_interps = _ops(dec_ops)
    cm.decrypt_nodes = dec_ops.decrypt_nodes


def _proposed(fx: _Fixture, params: BenchParams, rng: random.Random, cm: CostModel) -> None:
    group, pk, k = fx.group, fx.authority.pk, params.threshold
    p = group.order
    names = [f"RU{i + 1}" for i in range(params.t)]
    st, et, dst_ca, dst_cd, dt = _Clock(), _Clock(), _Clock(), _Clock(), _Clock()

    t0 = time.perf_counter_ns()
    with group.counting() as enc_ops:
        with st:
            secrets, rnd = {}, ShareRound(group, k)
            for pid in names:
                secrets[pid] = group.random_scalar(rng)
                rnd.register_fresh(pid, fx.area_key, group.g2 ** secrets[pid], rng)
            contributors = names[:k]
            h = run_sharing(rnd, {pid: gen_contribution(k, rng, p, secrets[pid]) for pid in contributors})
        semis = []
        for i, pid in enumerate(names):
            with et:
                semis.append(ru_encrypt(pk, fx.gamma, fx.payloads[i], secrets[pid], h[pid],
                                        i < k, rnd.roster[pid], rng))
        with dst_ca:
            finished, cached = ca_finalize_batch(semis[:k], k)
            roster = list(rnd.roster.values())
            finished += [ca_finalize_delayed(s, cached, roster) for s in semis[k:]]
    cm.enc_total_ns = time.perf_counter_ns() - t0

    t0 = time.perf_counter_ns()
    with group.counting() as dec_ops:
        with dst_cd:
            pre = [cd_predecrypt(ct, fx.area_key, pk) for ct in finished]
            chosen = sorted(pre, key=lambda c: c.cid.x)[:k]
            shares = {u: interpolate_exponent_at_zero([(c.cid.x, c.C_u[u]) for c in chosen])
                      for u in sorted(fx.gamma)}
        with dt:
            f_root = decrypt_node(fx.key.tree.root, fx.key.D, shares, fx.gamma)
            out = unblind_all(pre, f_root)
    cm.dec_total_ns = time.perf_counter_ns() - t0
    cm.recovered = sum(a == b for a, b in zip(out or [], fx.payloads))
    cm.abe_decrypts = dec_ops.decrypt_nodes
    cm.st_ns, cm.et_ns, cm.dst_ca_ns = st.total, et.total, dst_ca.total
    cm.dst_cd_ns, cm.dt_ns = dst_cd.total, dt.total
    cm.enc_pairings, cm.enc_exps, cm.enc_interps = _ops(enc_ops)
    cm.dec_pairings, cm.dec_exps, cm.dec_interps = _ops(dec_ops)
    cm.decrypt_nodes = dec_ops.decrypt_nodes


_RUNNERS = {SchemeKind.SCHEME1: _scheme1, SchemeKind.SCHEME2: _scheme2, SchemeKind.PROPOSED: _proposed}


def measure(kind: SchemeKind, params: BenchParams, reps: int = 5, warmup: bool = True) -> list[CostModel]:
    """R timed executions of one (scheme, params) cell, after an untimed warm-up."""
    kind = SchemeKind(kind)
    params.check(kind)
    if reps < 1:
        raise ValueError("need at least one repetition")
    fx = _fixture(params)
    tp_ns = round(params.tp * 1e9)
    tpk_ns = tp_ns * params.threshold // params.t if params.t else 0
    samples = []
    for rep in range(-1 if warmup else 0, reps):
        cm = CostModel(scheme=kind.value, t=params.t, k=params.threshold, msg_size=params.msg_size,
                       attrs=params.attrs, seed=params.seed, rep=rep, tp_ns=tp_ns,
                       tpk_ns=tpk_ns if kind is SchemeKind.PROPOSED else 0)
        rng = random.Random(f"{params.seed}/{kind.value}/{rep}")
        gc.collect()
        gc.disable()
        try:
            _RUNNERS[kind](fx, params, rng, cm)
        finally:
            gc.enable()
        if rep >= 0:
            samples.append(cm)
    return samples


def run_scheme(kind: SchemeKind, params: BenchParams, reps: int = 5) -> CostModel:
    """Median over R repetitions of every component, total and op count."""
    return median_cost(measure(kind, params, reps))
