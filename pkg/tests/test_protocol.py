import itertools
import json
import random
from dataclasses import replace

import pytest

from dtkpabe.kpabe import AttributeUniverse, keygen, setup
from dtkpabe.payload import encode_payload
from dtkpabe.policy import parse_policy
from dtkpabe.protocol import (AgencyOperator, AODefinition, Arrival, CentralAggregator, ProtocolError,
                              TransactionConfig, TrustedAuthority, ao_decrypt, blind_message, ca_finalize_batch,
                              ca_finalize_delayed, cd_predecrypt, parse_scenario, recover_blinding, run_scenario)
from dtkpabe.protocol.roles import select_for_interpolation, unblind_all
from dtkpabe.protocol.simulator import summarize
from dtkpabe.sharing import CidError, make_cid
from helpers import protocol_round, sharing_round

U = AttributeUniverse(("res", "zone-1", "zone-2", "solar", "ev"))
GAMMA = frozenset({1, 2, 4})


@pytest.fixture(scope="module")
def world(bls):
    rng = random.Random(77)
    pk, mk = setup(bls, U, rng)
    key_ok = keygen(bls, mk, parse_policy({"and": [{"attr": "res"}, {"attr": "zone-1"}]}, U), rng)
    key_no = keygen(bls, mk, parse_policy({"and": [{"attr": "res"}, {"attr": "ev"}]}, U), rng)
    return pk, mk, key_ok, key_no, rng.randbytes(32)


# -- RU --------------------------------------------------------------------

def test_semi_shape_and_clear_oracles(bls, world, rng):
    pk, mk, *_ , area_key = world
    rnd, secrets, contribs, h = sharing_round(bls, 3, 2, rng, area_key)
    m, wrapped = encode_payload(bls, b"42 kWh", rng)
    for i, pid in enumerate(rnd.roster):
        semi = blind_message(pk, GAMMA, m, wrapped, secrets[pid], h[pid], i < 2, rnd.roster[pid])
        assert set(semi.C_u) == GAMMA
        assert semi.is_batch == (i < 2) and (semi.C_tilde is not None) == (i < 2)
        assert semi.C_hat / bls.pair(pk.A, bls.g2 ** secrets[pid]) == m
        for u in GAMMA:
            assert semi.C_u[u] == bls.g1 ** (mk.t[u] * h[pid])
        if semi.is_batch:
            assert semi.C_tilde == bls.gt ** (mk.y * h[pid])


def test_empty_gamma_rejected(bls, world, rng):
    pk, *_ , area_key = world
    cid = make_cid(bls, area_key, bls.g2, rng)
    with pytest.raises(ValueError):
        blind_message(pk, set(), bls.gt, b"", 1, 1, True, cid)


# -- CA --------------------------------------------------------------------

def test_ca_batch_and_finished_form(bls, world, rng):
    pk, mk, *_ , area_key = world
    r = protocol_round(pk, 5, 3, GAMMA, rng, area_key)
    ys = bls.gt ** (mk.y * r["s"])
    assert r["cached"] == ys
    for i, (semi, fin) in enumerate(zip(r["semis"], r["finished"])):
        pid = f"RU{i + 1}"
        m = semi.C_hat / bls.pair(pk.A, bls.g2 ** r["secrets"][pid])
        assert fin.C_hat == m * bls.gt ** (mk.alpha * r["secrets"][pid]) * ys


def test_ca_k1_round(bls, world, rng):
    pk, mk, key_ok, _, area_key = world
    r = protocol_round(pk, 3, 1, GAMMA, rng, area_key)
    assert r["cached"] == bls.gt ** (mk.y * r["s"])
    assert ao_decrypt(r["pre"], key_ok, 1) == r["payloads"]


def test_ca_batch_errors(bls, world, rng):
    pk, *_ , area_key = world
    r = protocol_round(pk, 4, 3, GAMMA, rng, area_key)
    semis = r["semis"]
    with pytest.raises(ProtocolError):
        ca_finalize_batch(semis[:2], 3)
    with pytest.raises(ProtocolError):
        ca_finalize_batch([semis[0], semis[0], semis[1]], 3)
    with pytest.raises(ProtocolError):
        ca_finalize_batch([semis[0], semis[1], semis[3]], 3)  # semis[3] has no C_tilde


def test_ca_delayed_path(bls, world, rng):
    pk, mk, key_ok, _, area_key = world
    r = protocol_round(pk, 5, 3, GAMMA, rng, area_key)
    late = r["semis"][4]
    with pytest.raises(ProtocolError):
        ca_finalize_delayed(late, None)
    stranger = make_cid(bls, area_key, bls.g2, rng)
    with pytest.raises(ProtocolError):
        ca_finalize_delayed(replace(late, cid=stranger), r["cached"], r["round"].roster.values())
    with bls.counting() as ops:
        fin = ca_finalize_delayed(late, r["cached"], r["round"].roster.values())
    assert ops.pairings == 0 and ops.interpolations == 0 and ops.exponentiations == 0
    assert fin == r["finished"][4]
    out = ao_decrypt(r["pre"], key_ok, 3)
    assert out[4] == r["payloads"][4]


def test_ca_object_flow(bls, world, rng):
    pk, *_ , area_key = world
    r = protocol_round(pk, 5, 3, GAMMA, rng, area_key)
    ca = CentralAggregator(3)
    for cid in r["round"].roster.values():
        ca.register(cid)
    got = [ca.receive(s) for s in r["semis"]]
    assert [len(g) for g in got] == [0, 0, 3, 1, 1]
    assert ca.cached_gt == r["cached"]
    with pytest.raises(ProtocolError):
        ca.receive(replace(r["semis"][0], cid=make_cid(bls, area_key, bls.g2, rng)))


# -- CD --------------------------------------------------------------------

def test_cd_predecrypt(bls, world, rng):
    pk, mk, *_ , area_key = world
    r = protocol_round(pk, 3, 2, GAMMA, rng, area_key)
    ys = bls.gt ** (mk.y * r["s"])
    for i, (semi, pre) in enumerate(zip(r["semis"], r["pre"])):
        m = semi.C_hat / bls.pair(pk.A, bls.g2 ** r["secrets"][f"RU{i + 1}"])
        assert pre.C_tilde_out == m * ys
        assert pre.C_tilde_out != m


def test_cd_wrong_key(bls, world, rng):
    pk, *_ , area_key = world
    r = protocol_round(pk, 2, 2, GAMMA, rng, area_key)
    ct = r["finished"][0]
    before = (ct.C_hat, dict(ct.C_u), ct.wrapped)
    with pytest.raises(CidError):
        cd_predecrypt(ct, rng.randbytes(32), pk)
    assert (ct.C_hat, ct.C_u, ct.wrapped) == before


# -- AO --------------------------------------------------------------------

def test_ao_l_equals_k_one_decrypt_node(bls, world, rng):
    pk, mk, key_ok, _, area_key = world
    r = protocol_round(pk, 3, 3, GAMMA, rng, area_key)
    with bls.counting() as ops:
        out = ao_decrypt(r["pre"], key_ok, 3)
    assert out == r["payloads"]
    assert ops.decrypt_nodes == 1


def test_ao_subset_independence(bls, world, rng):
    pk, mk, key_ok, _, area_key = world
    r = protocol_round(pk, 6, 3, GAMMA, rng, area_key)
    assert ao_decrypt(r["pre"], key_ok, 3) == r["payloads"]
    roots = {recover_blinding(r["pre"], key_ok, 3, chosen=list(sub)) for sub in itertools.combinations(r["pre"], 3)}
    assert roots == {bls.gt ** (mk.y * r["s"])}


def test_ao_unsatisfied(bls, world, rng):
    pk, mk, _, key_no, area_key = world
    r = protocol_round(pk, 3, 2, GAMMA, rng, area_key)
    with bls.counting() as ops:
        assert ao_decrypt(r["pre"], key_no, 2) is None
    assert ops.pairings == 0 and ops.interpolations == 0


def test_ao_input_checks(bls, world, rng):
    pk, mk, key_ok, _, area_key = world
    r = protocol_round(pk, 3, 3, GAMMA, rng, area_key)
    with pytest.raises(ValueError):
        select_for_interpolation(r["pre"][:2], 3)
    other = protocol_round(pk, 3, 3, frozenset({1, 2}), rng, area_key)
    with pytest.raises(ValueError):
        ao_decrypt(r["pre"][:2] + other["pre"][:1], key_ok, 3)
    assert unblind_all(r["pre"], None) is None


def test_ao_object_keeps_last_root(bls, world, rng):
    pk, mk, key_ok, _, area_key = world
    r = protocol_round(pk, 4, 2, GAMMA, rng, area_key)
    ao = AgencyOperator("AO1", key_ok)
    assert ao.decrypt(r["pre"], 2) == r["payloads"]
    assert ao.last_f_root == bls.gt ** (mk.y * r["s"])
    assert ao.tree is key_ok.tree


def test_confusion_mixed_rounds(bls, world):
    pk, mk, key_ok, _, area_key = world
    rng = random.Random(5)
    for _ in range(10):
        k = rng.randint(2, 4)
        a = protocol_round(pk, k, k, GAMMA, rng, area_key)
        b = protocol_round(pk, k, k, GAMMA, rng, area_key)
        cut = rng.randint(1, k - 1)
        mixed = a["pre"][:cut] + b["pre"][cut:]
        out = ao_decrypt(mixed, key_ok, k)
        assert out == [None] * k


# -- authority -------------------------------------------------------------

def test_area_keys_are_stable_per_area(bls, rng):
    ta = TrustedAuthority(bls, U, rng)
    assert ta.area_key("north") == ta.area_key("north") != ta.area_key("south")
    assert len(ta.area_key("north")) == 32


# -- simulator -------------------------------------------------------------

def _cfg(**kw):
    base = dict(n=5, k=3, tp=10, seed=11, universe=U.labels)
    base.update(kw)
    return TransactionConfig(**base)


def _arrivals(times, attrs=("res", "zone-1", "solar")):
    return [Arrival(t, f"RU{i + 1}", attrs, f"payload {i + 1}".encode()) for i, t in enumerate(times)]


AO_OK = AODefinition("AO1", {"and": [{"attr": "res"}, {"attr": "zone-1"}]}, (3.5, 10.000001))
AO_NO = AODefinition("AO2", {"attr": "ev"}, (10.5,))


def test_simulation_delay_tolerance():
    tr = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 5]), [AO_OK, AO_NO])
    early, late = tr.for_ao("AO1")
    assert sorted(early.payloads) == ["RU1", "RU2", "RU3"]
    assert late.payloads == {f"RU{i}": f"payload {i}".encode() for i in range(1, 6)}
    assert early.f_root == late.f_root
    (denied,) = tr.for_ao("AO2")
    assert not denied.authorized and denied.payloads == {}
    for rec in tr.events("ao-decrypt"):
        assert rec["ops"]["decrypt_nodes"] == (1 if rec["authorized"] else 0)
    assert tr.finalized and len(tr.published) == 5


def test_simulation_deadline():
    tr = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 11]), [AO_OK])
    assert "RU5" in tr.rejected and "RU5" not in tr.accepted
    assert [r["reason"] for r in tr.events("reject")] == ["deadline"]
    assert "RU5" not in tr.for_ao("AO1")[-1].payloads
    assert all(owner != "RU5" for owner, _ in tr.published)


def test_simulation_arrival_at_tp_is_accepted():
    tr = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 10]), [AO_OK])
    assert "RU5" in tr.accepted


def test_simulation_stall():
    tr = run_scenario(_cfg(k=4), _arrivals([1, 2, 3]), [AO_OK])
    assert not tr.finalized
    (stall,) = tr.events("stall")
    assert stall["queued"] == 3 and stall["needed"] == 4
    assert all(not d.payloads for d in tr.deliveries)


def test_simulation_rejections():
    arr = [Arrival(1, "RU1", ("res", "zone-1"), b"a"), Arrival(2, "RU1", ("res", "zone-1"), b"b"),
           Arrival(3, "RU9", ("res", "zone-1"), b"c"), Arrival(4, "RU2", ("res", "mars"), b"d"),
           Arrival(5, "RU3", ("res",), b"e"), Arrival(6, "RU4", (), b"f")]
    tr = run_scenario(_cfg(k=1), arr, [])
    reasons = [r["reason"] for r in tr.events("reject")]
    assert reasons == ["duplicate", "unregistered", "unknown-attribute", "gamma-mismatch", "empty-attributes"]
    assert tr.accepted == {"RU1": b"a"}


def test_simulation_unsorted_arrivals():
    with pytest.raises(ValueError):
        run_scenario(_cfg(), _arrivals([2, 1]), [])


def test_simulation_config_validation():
    with pytest.raises(ValueError):
        _cfg(k=6)
    with pytest.raises(ValueError):
        _cfg(k=0)
    with pytest.raises(ValueError):
        _cfg(tp=0)


def test_simulation_request_before_anything():
    tr = run_scenario(_cfg(), _arrivals([5, 6, 7]), [AODefinition("AO1", {"attr": "res"}, (1,))])
    (d,) = tr.deliveries
    assert d.available == 0 and not d.payloads


def test_transcript_deterministic():
    a = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 5]), [AO_OK, AO_NO]).to_jsonl()
    b = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 5]), [AO_OK, AO_NO]).to_jsonl()
    c = run_scenario(_cfg(seed=12), _arrivals([1, 2, 3, 4, 5]), [AO_OK, AO_NO]).to_jsonl()
    assert a == b != c
    for line in a.splitlines():
        json.loads(line)


def test_honest_but_curious_views():
    tr = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 5]), [AO_OK])
    group, pk = tr.pk.group, tr.pk
    ca_view = b"".join(tr.view("CA"))
    cd_view = b"".join(tr.view("CD"))
    f_root = tr.for_ao("AO1")[-1].f_root
    area_key = tr.parties["RU1"].area_key
    pres = tr.parties["CD"]
    assert area_key not in ca_view
    assert not hasattr(tr.parties["CA"], "area_key") and not hasattr(tr.parties["CA"], "_area_keys")
    assert f_root.to_bytes() not in cd_view
    for pid, payload in tr.accepted.items():
        ru = tr.parties[pid]
        assert group.scalar_to_bytes(ru.s_i) not in ca_view
        assert payload not in ca_view and payload not in cd_view
        y_prime = (group.g2 ** ru.s_i).to_bytes()
        assert y_prime in cd_view
    # M_i recovered from what the AO sees must not appear in either view
    pre = pres.predecrypt("area-1", [ct for _, ct in tr.published])
    for p in pre:
        m = (p.C_tilde_out / f_root).to_bytes()
        assert m not in ca_view and m not in cd_view


def test_summarize_roles():
    tr = run_scenario(_cfg(), _arrivals([1, 2, 3, 4, 5]), [AO_OK])
    totals = summarize(tr)
    assert set(totals) == {"AO", "CA", "CD", "RU", "authority"}
    assert totals["AO"]["decrypt_nodes"] == 2
    # the CA interpolates once per round and never pairs
    assert totals["CA"]["interpolations"] == 1 and totals["CA"]["pairings"] == 0


def test_authority_universe_must_match(bls, rng):
    ta = TrustedAuthority(bls, AttributeUniverse(("x", "y")), rng)
    with pytest.raises(ValueError):
        run_scenario(_cfg(), [], [], authority=ta)


def test_parse_scenario():
    doc = {"config": {"n": 3, "k": 2, "tp": 5, "seed": 1, "universe": ["res", "zone-1"]},
           "arrivals": [{"time": 1, "ru": "RU1", "attributes": ["res"], "payload": "hi"},
                        {"time": 2, "ru": "RU2", "attributes": ["res"], "payload_hex": "00ff"}],
           "aos": [{"name": "AO1", "policy": {"attr": "res"}, "decrypt_times": [4]}]}
    cfg, arrivals, aos = parse_scenario(doc)
    assert cfg.group == "bls12-381" and cfg.area == "area-1"
    assert arrivals[1].payload == b"\x00\xff"
    tr = run_scenario(cfg, arrivals, aos)
    assert tr.for_ao("AO1")[0].payloads == {"RU1": b"hi", "RU2": b"\x00\xff"}
    with pytest.raises(ValueError):
        parse_scenario({"arrivals": []})
