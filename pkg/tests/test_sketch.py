import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aggsched.sketch import (
    EMPTY,
    MERSENNE61,
    DegenerateInputError,
    ExactState,
    HashFamily,
    SketchState,
    empty_signature,
    est_jaccard,
    merge,
    signature,
)

FAM = HashFamily.from_seed(100, seed=5)
keysets = st.sets(st.integers(0, 2**64 - 1), max_size=60).map(sorted)

# two functions from the worked minhash example
SMALL_FAM = HashFamily((1, 3), (1, 1), modulus=11)
S_EX = [0, 1, 2, 3, 4, 5, 6, 8]
T_EX = [0, 1, 2, 3, 4, 5, 9, 10]


def test_hash_matches_python_bigint():
    rng = np.random.default_rng(0)
    edge = np.array([0, 1, 2**64 - 1, MERSENNE61, MERSENNE61 + 1], dtype=np.uint64)
    xs = np.concatenate([edge, rng.integers(0, 2**63, 500).astype(np.uint64)])
    h = FAM.hash_values(xs)
    for j in range(0, 100, 7):
        for i, x in enumerate(xs):
            assert int(h[j, i]) == (FAM.a[j] * int(x) + FAM.b[j]) % MERSENNE61


def test_family_is_seeded():
    assert HashFamily.from_seed(10, 1) == HashFamily.from_seed(10, 1)
    assert HashFamily.from_seed(10, 1) != HashFamily.from_seed(10, 2)
    assert all(a % MERSENNE61 for a in HashFamily.from_seed(100, 0).a)


def test_family_rejects_zero_multiplier():
    with pytest.raises(ValueError):
        HashFamily((0,), (1,), modulus=11)
    with pytest.raises(ValueError):
        HashFamily((11,), (1,), modulus=11)


def test_small_modulus_functions():
    h = SMALL_FAM.hash_values(range(11))
    assert list(h[0]) == [(x + 1) % 11 for x in range(11)]
    assert list(h[1]) == [(3 * x + 1) % 11 for x in range(11)]


def test_worked_example_jaccard():
    assert len(set(S_EX) & set(T_EX)) / len(set(S_EX) | set(T_EX)) == pytest.approx(6 / 10)
    a, b = signature(S_EX, SMALL_FAM), signature(T_EX, SMALL_FAM)
    assert a[1] == b[1] and a[0] != b[0]
    assert est_jaccard(a, b) == 0.5


def test_empty_signature():
    assert np.all(signature([], FAM) == EMPTY)


def test_singleton_signature():
    np.testing.assert_array_equal(signature([5], FAM), FAM.hash_values([5])[:, 0])


@given(keysets)
def test_signature_order_and_duplicate_invariant(keys):
    twice = np.array(keys[::-1] + keys, dtype=np.uint64)
    np.testing.assert_array_equal(signature(keys, FAM), signature(twice, FAM))


@given(keysets, keysets)
def test_merge_equals_signature_of_union(s, t):
    np.testing.assert_array_equal(merge(signature(s, FAM), signature(t, FAM)), signature(sorted(set(s) | set(t)), FAM))


@given(keysets, keysets, keysets)
def test_merge_algebra(a, b, c):
    x, y, z = (signature(k, FAM) for k in (a, b, c))
    np.testing.assert_array_equal(merge(x, y), merge(y, x))
    np.testing.assert_array_equal(merge(merge(x, y), z), merge(x, merge(y, z)))
    np.testing.assert_array_equal(merge(x, x), x)
    np.testing.assert_array_equal(merge(x, empty_signature(FAM.n)), x)


def test_merge_length_mismatch():
    with pytest.raises(ValueError):
        merge(signature([1], FAM), signature([1], HashFamily.from_seed(5)))


def test_est_jaccard_identical():
    sig = signature(range(100), FAM)
    assert est_jaccard(sig, sig) == 1.0


def test_est_jaccard_degenerate():
    with pytest.raises(DegenerateInputError):
        est_jaccard(empty_signature(4), empty_signature(4))


def test_disjoint_sets_estimate_near_zero():
    rng = np.random.default_rng(17)
    hits = 0
    for _ in range(50):
        keys = rng.choice(2**40, size=2000, replace=False)
        hits += est_jaccard(signature(keys[:1000], FAM), signature(keys[1000:], FAM)) <= 0.1
    assert hits >= 48


def _state(sets, fam=FAM):
    return SketchState.from_data([[np.array(sorted(s), dtype=np.uint64)] for s in sets], fam)


def test_est_card_worked_example():
    st = _state([S_EX, T_EX], SMALL_FAM)
    assert st.est_card(0, 1, 0) == pytest.approx(16 / 1.5)


def test_est_card_identical_and_disjoint():
    st = _state([range(40), range(40), range(1000, 1030)])
    assert st.est_card(0, 1, 0) == 40
    # a disjoint pair is exact whenever no signature entry collides
    if est_jaccard(st.minh[0, 0], st.minh[2, 0]) == 0:
        assert st.est_card(0, 2, 0) == 70


def test_est_card_both_empty_raises():
    st = _state([[], [], [1]])
    with pytest.raises(DegenerateInputError):
        st.est_card(0, 1, 0)


def test_update_clears_sender_and_merges():
    a, b = set(range(0, 500)), set(range(300, 900))
    st = _state([a, b])
    st.update(0, 1, 0)
    assert st.card[0, 0] == 0 and np.all(st.minh[0, 0] == EMPTY)
    np.testing.assert_array_equal(st.minh[1, 0], signature(sorted(a | b), FAM))


def test_update_identical_singletons():
    st = _state([{42}, {42}])
    st.update(0, 1, 0)
    assert st.card[1, 0] == 1.0


def test_update_into_empty_destination_keeps_count():
    st = _state([[], range(10)])
    st.update(1, 0, 0)
    assert st.card[0, 0] == 10


def test_union_estimates_match_pairwise():
    rng = np.random.default_rng(3)
    sets = [set(rng.choice(500, 200, replace=False).tolist()) for _ in range(4)] + [set()]
    st = _state(sets)
    u = st.union_estimates(0)
    for s in range(5):
        for t in range(5):
            if sets[s] or sets[t]:
                assert u[s, t] == pytest.approx(st.est_card(s, t, 0))


def test_exact_state_tracks_true_union():
    ex = ExactState([[np.array([1, 2, 3])], [np.array([3, 4])], [np.array([], dtype=np.uint64)]])
    assert ex.est_card(0, 1, 0) == 4
    ex.update(0, 1, 0)
    assert ex.card[1, 0] == 4 and ex.card[0, 0] == 0
    assert ex.union_estimates(0)[1, 2] == 4


def test_accuracy_with_100_hashes():
    """|J_est - J_exact| <= 0.1 in at least 90% of trials."""
    rng = np.random.default_rng(2024)
    trials = ok = 0
    for target in (0.0, 0.25, 0.5, 0.75, 1.0):
        for _ in range(40):
            size = int(rng.integers(1000, 10_001))
            shared = int(round(2 * size * target / (1 + target)))
            pool = rng.choice(2**40, size=2 * size - shared, replace=False)
            s, t = pool[:size], pool[size - shared:]
            exact = len(set(s.tolist()) & set(t.tolist())) / len(set(s.tolist()) | set(t.tolist()))
            fam = HashFamily.from_seed(100, seed=int(rng.integers(1 << 30)))
            ok += abs(est_jaccard(signature(s, fam), signature(t, fam)) - exact) <= 0.1
            trials += 1
    assert ok / trials >= 0.9
