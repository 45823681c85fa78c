import numpy as np
import pytest

from koopseed.dictionary import (
    Dictionary,
    VariableLayout,
    build_dictionary,
    embed_indices,
)


def test_sizes_match_binomial_counts():
    assert len(build_dictionary(2, 3)) == 10
    assert len(build_dictionary(6, 3)) == 84
    assert len(build_dictionary(4, 3)) == 35
    assert len(build_dictionary(2, 2)) == 6


def test_degree_one_single_variable():
    d = build_dictionary(1, 1)
    assert d.entries == ((0,), (1,))


def test_constant_first_and_graded_order():
    d = build_dictionary(2, 3)
    assert d.entries[0] == (0, 0)
    degrees = [sum(m) for m in d.entries]
    assert degrees == sorted(degrees)
    # within each degree the x1-major monomial comes first
    assert d.entries[1] == (1, 0) and d.entries[2] == (0, 1)
    assert d.entries[3:6] == ((2, 0), (1, 1), (0, 2))


def test_ordering_is_deterministic():
    a = build_dictionary(3, 4)
    b = build_dictionary(3, 4)
    assert a.entries == b.entries


def test_index_round_trip():
    d = build_dictionary(3, 3)
    for i, m in enumerate(d.entries):
        assert d.index_of(m) == i


def test_state_indices_are_variable_order():
    d = build_dictionary(4, 2)
    assert list(d.state_indices()) == [1, 2, 3, 4]


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        build_dictionary(0, 3)
    with pytest.raises(ValueError):
        build_dictionary(2, 0)


def test_evaluate_simple_monomials():
    d = build_dictionary(2, 3)
    vals = d.evaluate([2.0, 1.0])
    assert vals[d.index_of((2, 1))] == pytest.approx(4.0)
    assert vals[d.index_of((0, 0))] == 1.0
    assert vals[d.index_of((3, 0))] == pytest.approx(8.0)


def test_evaluate_zero_state():
    d = build_dictionary(3, 2)
    vals = d.evaluate(np.zeros(3))
    expected = np.zeros(len(d))
    expected[0] = 1.0
    assert np.array_equal(vals, expected)


def test_evaluate_powers_of_three():
    d = build_dictionary(1, 2)
    assert np.allclose(d.evaluate([3.0]), [1.0, 3.0, 9.0])


def test_evaluate_batch_matches_single():
    d = build_dictionary(2, 3)
    rng = np.random.default_rng(0)
    xs = rng.uniform(-2, 2, size=(17, 2))
    batch = d.evaluate(xs)
    for k, x in enumerate(xs):
        assert np.array_equal(batch[k], d.evaluate(x))


def test_evaluate_rejects_bad_input():
    d = build_dictionary(2, 2)
    with pytest.raises(ValueError):
        d.evaluate([1.0])
    with pytest.raises(ValueError):
        d.evaluate([np.nan, 0.0])
    with pytest.raises(ValueError):
        d.evaluate([np.inf, 0.0])


def test_evaluate_is_multiplicative():
    # value at m+n equals product of values whenever m+n stays in range
    d = build_dictionary(2, 4)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.uniform(-1.5, 1.5, size=2)
        vals = d.evaluate(x)
        for m in d.entries:
            for n in d.entries:
                s = (m[0] + n[0], m[1] + n[1])
                if s in d:
                    prod = vals[d.index_of(m)] * vals[d.index_of(n)]
                    assert vals[d.index_of(s)] == pytest.approx(prod, rel=1e-12, abs=1e-12)


def test_layout_offsets():
    layout = VariableLayout((2, 3, 1))
    assert layout.offsets == (0, 2, 5, 6)
    assert layout.total_vars == 6
    assert list(layout.variables_of(1)) == [2, 3, 4]
    with pytest.raises(ValueError):
        VariableLayout((2, 0))


def test_embed_zero_pads_into_subsystem_slots():
    layout = VariableLayout((2, 2))
    glob = build_dictionary(4, 3)
    local = build_dictionary(2, 3)
    m0 = embed_indices(local, layout, 0, glob)
    m1 = embed_indices(local, layout, 1, glob)
    assert m0[local.index_of((2, 0))] == glob.index_of((2, 0, 0, 0))
    assert m1[local.index_of((2, 0))] == glob.index_of((0, 0, 2, 0))
    # constants collapse onto the global constant
    assert m0[0] == 0 and m1[0] == 0


def test_embed_images_overlap_only_at_constant():
    # derived by enumerating both embeddings and intersecting
    layout = VariableLayout((2, 2))
    glob = build_dictionary(4, 3)
    local = build_dictionary(2, 3)
    assert len(glob) == 35
    img0 = set(embed_indices(local, layout, 0, glob).tolist())
    img1 = set(embed_indices(local, layout, 1, glob).tolist())
    assert len(img0) == 10 and len(img1) == 10
    assert img0 & img1 == {0}


def test_embed_is_injective():
    layout = VariableLayout((2, 2, 2))
    glob = build_dictionary(6, 3)
    local = build_dictionary(2, 3)
    for s in range(3):
        mapping = embed_indices(local, layout, s, glob)
        assert len(set(mapping.tolist())) == len(mapping)


def test_embed_rejects_mismatches():
    layout = VariableLayout((2, 2))
    glob = build_dictionary(4, 2)
    with pytest.raises(ValueError):
        embed_indices(build_dictionary(3, 2), layout, 0, glob)
    with pytest.raises(ValueError):
        embed_indices(build_dictionary(2, 3), layout, 0, glob)  # degree too high
    with pytest.raises(ValueError):
        embed_indices(build_dictionary(2, 2), layout, 5, glob)
