import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from privcache.model import BitVector, ConfigError, DemandVector, InstanceParams, Library, window
from privcache.privatizer import (
    DecodeError,
    KeyMaterial,
    compute_key,
    expected_memory,
    generate_keys,
    key_layout,
    omega,
    private_deliver,
    private_place,
    share_reconstruct,
    share_split,
    split_with,
    user_decode,
    virtual_demand,
)
from privcache.schemes import singleton_scheme, stripe_scheme, uncached_scheme


def small_library():
    # W1 = 110100, W2 = 011001, W3 = 101111; parts of 2 bits
    return Library(tuple(BitVector.from_string(s) for s in ("110100", "011001", "101111")))


# ---------- keys


def test_compute_key_zero_and_unit_coefficients(example_params):
    lib = small_library()
    part = singleton_scheme().partition(example_params)
    assert compute_key((3,), lib, part, (0, 0, 0)) == BitVector.zeros(2)
    for n in (1, 2, 3):
        e = tuple(int(i == n) for i in (1, 2, 3))
        assert compute_key((3,), lib, part, e) == part.subfile(lib.file(n), (3,))


def test_compute_key_combination():
    lib = small_library()
    part = singleton_scheme().partition(InstanceParams(3, 2, 3, 6))
    # part {3} is bits 4..5: W1 -> "00", W3 -> "11"; bitwise XOR by hand
    assert compute_key((3,), lib, part, (1, 0, 1)) == BitVector.from_string("11")
    with pytest.raises(ValueError):
        compute_key((3,), lib, part, (1, 0))


@pytest.mark.parametrize(
    "d, p, q",
    [
        (2, (0, 0, 0), (0, 1, 0)),
        (1, (1, 1, 0), (0, 1, 0)),
    ],
)
def test_virtual_demand(d, p, q):
    assert virtual_demand(d, p) == q


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8).flatmap(lambda p: st.tuples(st.just(p), st.integers(1, len(p)))))
def test_virtual_demand_is_an_involution(pd):
    p, d = pd
    q = virtual_demand(d, p)
    assert virtual_demand(d, q) == tuple(p)
    assert sum(a != b for a, b in zip(p, q)) == 1


def test_generate_keys_is_deterministic(example_params):
    s = singleton_scheme()
    a = generate_keys(s, example_params, 3, "pad")
    b = generate_keys(s, example_params, 3, "pad")
    assert a.p == b.p and a.randomness == b.randomness
    assert generate_keys(s, example_params, 4, "pad").randomness != a.randomness


def test_nonprivate_keys_are_empty(example_params):
    keys = generate_keys(singleton_scheme(), example_params, 1, "none")
    assert keys.p == ((0, 0, 0),) * 3
    assert not keys.randomness


def test_key_json_round_trip(example_params):
    s = singleton_scheme()
    for mode in ("pad", "share", "none"):
        keys = generate_keys(s, example_params, 5, mode)
        back = KeyMaterial.from_json(keys.to_json(), s, example_params)
        assert back.p == keys.p and back.randomness == keys.randomness and back.seed == 5
    with pytest.raises(ValueError):
        KeyMaterial.from_json('{"format": "other"}', s, example_params)


# ---------- omega and sharing


@pytest.mark.parametrize(
    "K, L, expected",
    [
        (5, 2, (2, (1, 2))),
        (4, 3, (3, (1, 2, 3))),
        (2, 1, (1, (1,))),
        (5, 3, (2, (1, 3))),
        (1, 1, (1, (1,))),
    ],
)
def test_omega(K, L, expected):
    assert omega(K, L) == expected


def brute_omega(K, L):
    """Independent scan over all subsets of [L] by size, checking every other window."""
    wins = [set(window(k, InstanceParams(K, L, 1, 1))) for k in range(2, K + 1)]
    for size in range(1, L + 1):
        for cand in itertools.combinations(range(1, L + 1), size):
            if not any(set(cand) <= w for w in wins):
                return size
    return None


@pytest.mark.parametrize("K, L", [(k, l) for k in range(1, 9) for l in range(1, k + 1)])
def test_omega_matches_window_scan(K, L):
    want = brute_omega(K, L)
    if want is None:
        with pytest.raises(ConfigError):
            omega(K, L)
    else:
        assert omega(K, L)[0] == want


def test_omega_impossible_when_every_window_is_everything():
    with pytest.raises(ConfigError):
        omega(3, 3)


def test_share_split_small_cases():
    rng = random.Random(0)
    s = BitVector.from_string("1011")
    assert share_split(s, 1, rng) == [s]
    a, masked = share_split(s, 2, rng)
    assert masked == s ^ a
    with pytest.raises(ValueError):
        share_split(s, 0, rng)
    with pytest.raises(ValueError):
        share_reconstruct([a], 2)


@given(st.integers(0, 255), st.integers(1, 6), st.integers(0, 2**32))
def test_share_reconstruct_round_trip(value, w, seed):
    s = BitVector(value, 8)
    shares = share_split(s, w, random.Random(seed))
    assert len(shares) == w
    assert share_reconstruct(shares, w) == s


def test_any_two_of_three_shares_are_exactly_uniform():
    # exhaust both masks for each 1-bit secret; counts must not depend on the secret
    for subset in itertools.combinations(range(3), 2):
        per_secret = []
        for secret in (0, 1):
            c = Counter()
            for r1, r2 in itertools.product((0, 1), repeat=2):
                shares = split_with(BitVector(secret, 1), [BitVector(r1, 1), BitVector(r2, 1)])
                c[tuple(shares[i].value for i in subset)] += 1
            per_secret.append(c)
        assert per_secret[0] == per_secret[1]
        assert set(per_secret[0].values()) == {1}


def test_two_of_three_shares_statistically_uniform():
    rng = random.Random(2024)
    secret = BitVector.from_string("1")
    trials = 10_000
    for subset in itertools.combinations(range(3), 2):
        c = Counter()
        for _ in range(trials):
            shares = share_split(secret, 3, rng)
            c[tuple(shares[i].value for i in subset)] += 1
        expected = trials / 4
        stat = sum((c[o] - expected) ** 2 / expected for o in itertools.product((0, 1), repeat=2))
        assert stat < 11.345  # chi2.ppf(0.99, df=3)


def test_one_time_pad_masking_exact():
    c = Counter()
    for s, a in itertools.product((0, 1), repeat=2):
        c[(s, s ^ a)] += 1
    # masked key uniform and independent of the key: every (key, masked) pair once
    assert c == Counter({(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1})


# ---------- placement


def test_example_placement(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 7, "pad")
    placement = private_place(s, example_params, example_library, keys)
    assert list(placement.nodes[1].keys) == [("mask", 1, (3,)), ("pad", 3, (2,))]
    assert list(placement.nodes[2].keys) == [("mask", 2, (1,)), ("pad", 1, (3,))]
    assert list(placement.nodes[3].keys) == [("mask", 3, (2,)), ("pad", 2, (1,))]
    for i in (1, 2, 3):
        assert placement.memory(i) == Fraction(5, 3)
        assert placement.nodes[i].labels == ((i,),)
    part = s.partition(example_params)
    S13 = compute_key((3,), example_library, part, keys.p_vector(1))
    assert placement.nodes[1].keys[("mask", 1, (3,))] == S13 ^ keys.pad(1, (3,))
    assert placement.nodes[2].keys[("pad", 1, (3,))] == keys.pad(1, (3,))


def test_stripe_base_needs_no_keys():
    params = InstanceParams(4, 2, 2, 4)
    s = stripe_scheme()
    keys = generate_keys(s, params, 1, "pad")
    assert not keys.randomness
    placement = private_place(s, params, Library.random(2, 4, random.Random(0)), keys)
    assert all(placement.memory(i) == Fraction(params.N, params.L) for i in params.users)
    assert expected_memory(s, params, "pad") == Fraction(params.N, params.L)


def test_share_mode_memory_k4_l3():
    params = InstanceParams(4, 3, 4, 8)
    s = singleton_scheme()
    keys = generate_keys(s, params, 2, "share")
    assert keys.omega == 3
    placement = private_place(s, params, Library.random(4, 8, random.Random(1)), keys)
    for i in params.users:
        assert placement.memory(i) == Fraction(7, 4)


def test_pad_mode_refused_at_boundary():
    params = InstanceParams(4, 3, 2, 4)
    with pytest.raises(ConfigError, match="share mode"):
        key_layout(singleton_scheme(), params, "pad")


# ---------- delivery and decoding


def test_example_delivery(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 7, "pad")
    d = DemandVector((1, 2, 3))
    bc = private_deliver(s, example_params, example_library, d, keys)
    assert bc.header == tuple(virtual_demand(d[k], keys.p_vector(k)) for k in (1, 2, 3))
    assert bc.header_bits == 9
    assert len(bc.packets) == 1
    part = s.partition(example_params)
    want = BitVector.zeros(2)
    for k, q in ((1, (3,)), (2, (1,)), (3, (2,))):
        want = want ^ compute_key(q, example_library, part, bc.header[k - 1])
    assert bc.packets[0].payload == want


def test_zero_coefficients_deliver_true_subfiles(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 7, "none")
    bc = private_deliver(s, example_params, example_library, DemandVector((1, 2, 3)), keys)
    part = s.partition(example_params)
    want = (
        part.subfile(example_library.file(1), (3,))
        ^ part.subfile(example_library.file(2), (1,))
        ^ part.subfile(example_library.file(3), (2,))
    )
    assert bc.packets[0].payload == want


def decode_all(scheme, params, library, keys, d):
    placement = private_place(scheme, params, library, keys)
    bc = private_deliver(scheme, params, library, d, keys)
    return [user_decode(k, bc, placement.view(k, params), d[k], scheme, params, keys.layout) for k in params.users]


def test_example_users_recover_their_files(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 7, "pad")
    got = decode_all(s, example_params, example_library, keys, DemandVector((1, 2, 3)))
    assert got == [example_library.file(n) for n in (1, 2, 3)]


def test_full_window_decodes_without_packets():
    params = InstanceParams(3, 3, 2, 3)
    s = singleton_scheme()
    lib = Library.random(2, 3, random.Random(4))
    keys = generate_keys(s, params, 1, "none")
    d = DemandVector((2, 1, 2))
    assert private_deliver(s, params, lib, d, keys).packets == ()
    assert decode_all(s, params, lib, keys, d) == [lib.file(n) for n in d]


def test_random_instances_decode():
    rng = random.Random(100)
    schemes = [singleton_scheme(), uncached_scheme(), stripe_scheme()]
    done = 0
    while done < 100:
        K = rng.randint(1, 5)
        L = rng.randint(1, K)
        N = rng.randint(1, 4)
        s = rng.choice(schemes)
        if s.name == "stripe" and K % L:
            continue
        g = s.granularity(InstanceParams(K, L, N, 1))
        B = g * rng.randint(1, max(1, 20 // g))
        params = InstanceParams(K, L, N, B)
        mode = rng.choice(["pad", "share", "none"])
        if mode == "pad" and not params.pad_mode_allowed:
            mode = "share"
        if mode == "share" and L == K and K > 1:
            mode = "none"
        lib = Library.random(N, B, rng)
        keys = generate_keys(s, params, rng.randrange(1 << 30), mode)
        d = DemandVector(tuple(rng.randint(1, N) for _ in range(K)))
        assert decode_all(s, params, lib, keys, d) == [lib.file(n) for n in d], (s.name, params, mode, d)
        done += 1


def test_decode_fails_without_pad(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 7, "pad")
    placement = private_place(s, example_params, example_library, keys)
    d = DemandVector((1, 2, 3))
    bc = private_deliver(s, example_params, example_library, d, keys)
    view = placement.view(1, example_params)
    del view[2]  # drop the node holding the pad
    with pytest.raises(DecodeError):
        user_decode(1, bc, view, 1, s, example_params, keys.layout)


def test_decode_fails_without_packets(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 7, "pad")
    placement = private_place(s, example_params, example_library, keys)
    bc = private_deliver(s, example_params, example_library, DemandVector((1, 2, 3)), keys)
    empty = type(bc)(bc.header, ())
    with pytest.raises(DecodeError, match="no packet"):
        user_decode(1, empty, placement.view(1, example_params), 1, s, example_params, keys.layout)


def test_load_matches_base_delivery_on_real_files(example_params, example_library):
    s = singleton_scheme()
    keys = generate_keys(s, example_params, 9, "pad")
    for d in itertools.product((1, 2, 3), repeat=3):
        bc = private_deliver(s, example_params, example_library, DemandVector(d), keys)
        assert [p.recipe for p in bc.packets] == [((1, (3,)), (2, (1,)), (3, (2,)))]
        assert bc.payload_bits == example_params.B // 3
