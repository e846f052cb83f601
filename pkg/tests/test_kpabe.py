import random

import pytest

from dtkpabe.interp import lagrange_coeff
from dtkpabe.kpabe import (Authority, BaselineCiphertext, gpsw_decrypt, gpsw_encrypt, keygen, keygen_from_keyed,
                           setup, verify_key)
from dtkpabe.policy import PolicyError, assign_polynomials, parse_policy
from helpers import minimal_gamma, random_policy, unsatisfying_gamma, universe

U = universe(6)
LABELS = list(U.labels)


def test_setup_shape_and_consistency(group, rng):
    u3 = universe(3)
    pk, mk = setup(group, u3, rng)
    assert set(pk.T) == {1, 2, 3}
    assert pk.Y == group.gt ** mk.y and pk.A == group.g1 ** mk.alpha
    for i, ti in mk.t.items():
        assert group.pair(pk.T[i], group.g2) == group.gt ** ti
        assert ti != 0
    assert len(set(mk.t.values())) == 3


def test_setup_deterministic(bls):
    from dtkpabe.serialize import dump_pk
    a, _ = setup(bls, U, random.Random(9))
    b, _ = setup(bls, U, random.Random(9))
    assert dump_pk(a) == dump_pk(b)


def test_single_leaf_key_from_clear_mk(bls, rng):
    pk, mk = setup(bls, U, rng)
    tree = parse_policy({"attr": "B"}, U)
    key = keygen(bls, mk, tree, rng)
    d = key.D[tree.root.id]
    assert d == bls.g2 ** (mk.y * pow(mk.t[2], -1, bls.order))
    s = bls.random_scalar(rng)
    assert bls.pair(pk.T[2] ** s, d) == bls.gt ** (mk.y * s)


def test_and_key_reconstructs_y(bls, rng):
    pk, mk = setup(bls, U, rng)
    tree = parse_policy({"and": [{"attr": "A"}, {"attr": "B"}]}, U)
    key = keygen(bls, mk, tree, rng)
    a, b = tree.root.children
    # e(T_A, D_A) = e(g,g)^{q_A(0)}; Lagrange at the root recovers y
    fa, fb = bls.pair(pk.T[1], key.D[a.id]), bls.pair(pk.T[2], key.D[b.id])
    p = bls.order
    assert fa ** lagrange_coeff(1, [1, 2], 0, p) * fb ** lagrange_coeff(2, [1, 2], 0, p) == pk.Y


def test_keygen_randomized(bls, rng):
    pk, mk = setup(bls, U, rng)
    tree = parse_policy({"and": [{"attr": "A"}, {"attr": "B"}]}, U)
    k1, k2 = keygen(bls, mk, tree, rng), keygen(bls, mk, tree, rng)
    assert k1.D != k2.D
    m = bls.random_gt(rng)
    ct = gpsw_encrypt(pk, {1, 2}, m, rng)
    assert gpsw_decrypt(k1, ct) == m == gpsw_decrypt(k2, ct)


def test_keygen_well_formed(bls, rng):
    pk, mk = setup(bls, U, rng)
    for _ in range(10):
        key = keygen(bls, mk, parse_policy(random_policy(rng, LABELS, 5), U), rng)
        assert set(key.D) == {leaf.id for leaf in key.tree.leaves()}
        assert verify_key(pk, key)
    broken = keygen(bls, mk, parse_policy({"attr": "A"}, U), rng)
    broken.D[0] = broken.D[0] * bls.g2
    assert not verify_key(pk, broken)


def test_keygen_unknown_attribute(bls, rng):
    pk, mk = setup(bls, universe(3), rng)
    tree = parse_policy({"attr": "F"}, U)  # id 6, outside the 3-attribute universe
    with pytest.raises(PolicyError):
        keygen(bls, mk, tree, rng)
    with pytest.raises(PolicyError):
        keygen_from_keyed(bls, mk, assign_polynomials(tree, 1, rng, bls.order))


def test_encrypt_shape(bls, rng):
    pk, mk = setup(bls, U, rng)
    ct = gpsw_encrypt(pk, {1, 3, 5}, bls.identity("GT"), rng)
    assert set(ct.E) == {1, 3, 5} and ct.gamma == {1, 3, 5}
    # every E_i = T_i^s for one common s, and E' = Y^s for the identity message
    p = bls.order
    blinds = {bls.pair(ct.E[i], bls.g2 ** pow(mk.t[i], -1, p)) for i in (1, 3, 5)}
    assert len(blinds) == 1
    assert blinds.pop() ** mk.y == ct.E_prime


def test_encrypt_identity_message_is_y_to_s(toy, rng):
    pk, mk = setup(toy, U, rng)
    ct = gpsw_encrypt(pk, {2}, toy.identity("GT"), rng)
    s = toy.dlog(ct.E[2]) * pow(mk.t[2], -1, toy.order) % toy.order
    assert ct.E_prime == pk.Y ** s


def test_encrypt_errors(bls, rng):
    pk, _ = setup(bls, U, rng)
    with pytest.raises(ValueError):
        gpsw_encrypt(pk, set(), bls.gt, rng)
    with pytest.raises(PolicyError):
        gpsw_encrypt(pk, {99}, bls.gt, rng)


def test_roundtrip_50_random(bls):
    rng = random.Random(21)
    pk, mk = setup(bls, U, rng)
    for _ in range(50):
        tree = parse_policy(random_policy(rng, LABELS, 5), U)
        key = keygen(bls, mk, tree, rng)
        gamma = minimal_gamma(rng, tree) | {a for a in U.ids if rng.random() < 0.3}
        m = bls.random_gt(rng)
        assert gpsw_decrypt(key, gpsw_encrypt(pk, gamma, m, rng)) == m
        bad = unsatisfying_gamma(rng, tree, U.ids)
        if bad is not None:
            assert gpsw_decrypt(key, gpsw_encrypt(pk, bad, m, rng)) is None


def test_tampered_component(bls, rng):
    pk, mk = setup(bls, U, rng)
    key = keygen(bls, mk, parse_policy({"and": [{"attr": "A"}, {"attr": "B"}]}, U), rng)
    m = bls.random_gt(rng)
    ct = gpsw_encrypt(pk, {1, 2}, m, rng)
    for attr in (1, 2):
        E = dict(ct.E)
        E[attr] = E[attr] * bls.g1
        assert gpsw_decrypt(key, BaselineCiphertext(ct.gamma, ct.E_prime, E)) != m
    assert gpsw_decrypt(key, BaselineCiphertext(ct.gamma, ct.E_prime * bls.gt, ct.E)) != m


def test_collusion_xy_yz_on_y(bls):
    X, Y, Z = 1, 2, 3
    for trial in range(20):
        rng = random.Random(1000 + trial)
        pk, mk = setup(bls, U, rng)
        k1 = keygen(bls, mk, parse_policy({"and": [{"attr": "A"}, {"attr": "B"}]}, U), rng)
        k2 = keygen(bls, mk, parse_policy({"and": [{"attr": "B"}, {"attr": "C"}]}, U), rng)
        m = bls.random_gt(rng)
        ct = gpsw_encrypt(pk, {Y}, m, rng)
        assert gpsw_decrypt(k1, ct) is None and gpsw_decrypt(k2, ct) is None
        # pool the Y leaves of both keys and try every gate-style recombination
        f1 = bls.pair(ct.E[Y], k1.D[k1.tree.root.children[1].id])
        f2 = bls.pair(ct.E[Y], k2.D[k2.tree.root.children[0].id])
        p = bls.order
        candidates = [f1, f2, f1 * f2, f1 / f2]
        for i, j in ((1, 2), (2, 1)):
            candidates.append(f1 ** lagrange_coeff(i, [i, j], 0, p) * f2 ** lagrange_coeff(j, [i, j], 0, p))
        for c in candidates:
            assert ct.E_prime / c != m


def test_authority_keygen(bls, rng):
    ta = Authority(bls, U, rng)
    key = ta.keygen('{"or":[{"attr":"A"},{"attr":"C"}]}')
    m = bls.random_gt(rng)
    assert gpsw_decrypt(key, gpsw_encrypt(ta.pk, {3}, m, rng)) == m
    assert ta.universe == U
    assert verify_key(ta.pk, ta.keygen({"attr": "F"}))
