import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cycleplan.core_data import ValidationError
from cycleplan.netagg import (
    AtomicSegment,
    NetworkSegment,
    atomize,
    dequantize_point,
    merge_contiguous,
    network_geojson,
    overline,
    quantize_point,
    segment_length_km,
    weighted_length_totals,
)

P0, P1, P2, P3 = (0.0, 0.0), (0.001, 0.0), (0.002, 0.0), (0.002, 0.001)


class TestQuantization:
    def test_round_trip_on_grid(self):
        q = quantize_point((0.123456, -1.000001))
        assert quantize_point(dequantize_point(q)) == q

    def test_nearby_points_collapse(self):
        assert quantize_point((0.1234564, 0.0)) == quantize_point((0.1234559, 0.0))

    @given(st.integers(-180_000_000, 180_000_000), st.integers(-90_000_000, 90_000_000))
    def test_grid_points_are_fixed(self, qlon, qlat):
        assert quantize_point(dequantize_point((qlon, qlat))) == (qlon, qlat)


class TestAtomize:
    def test_canonical_under_reversal(self):
        line = [P0, P1, P2, P3]
        assert atomize(line) == list(reversed(atomize(list(reversed(line)))))
        assert set(atomize(line)) == set(atomize(list(reversed(line))))

    def test_keys_are_ordered(self):
        for a, b in atomize([P3, P2, P1, P0]):
            assert a < b

    def test_zero_length_segments_dropped(self):
        noisy = [P0, (P0[0] + 1e-9, P0[1]), P1]
        assert atomize(noisy) == atomize([P0, P1])

    def test_needs_two_points(self):
        with pytest.raises(ValidationError):
            atomize([P0])


def brute_force_overline(routes):
    """Exact per-segment accumulation in rational arithmetic."""
    totals: dict = {}
    for coords, values in routes:
        for key in atomize(coords):
            cell = totals.setdefault(key, {})
            for name, v in values.items():
                cell[name] = cell.get(name, Fraction(0)) + Fraction(v)
    return totals


route_values = st.dictionaries(
    st.sampled_from(["slc_a", "slc_b"]),
    st.floats(0.0, 500.0, allow_nan=False),
    min_size=1,
    max_size=2,
)
grid_point = st.tuples(st.integers(0, 4), st.integers(0, 4)).map(
    lambda t: (t[0] * 0.001, t[1] * 0.001)
)
route_coords = st.lists(grid_point, min_size=2, max_size=8)


class TestOverline:
    def test_shared_segment_sums(self):
        atoms = overline(
            [
                ([P0, P1, P2], {"slc": 10.0}),
                ([P1, P2, P3], {"slc": 4.0}),
            ]
        )
        by_key = {seg.key: seg.values for seg in atoms}
        k01 = atomize([P0, P1])[0]
        k12 = atomize([P1, P2])[0]
        k23 = atomize([P2, P3])[0]
        assert by_key[k01] == {"slc": 10.0}
        assert by_key[k12] == {"slc": 14.0}
        assert by_key[k23] == {"slc": 4.0}

    def test_repeated_traversal_counts_per_occurrence(self):
        out_and_back = [P0, P1, P0]
        (seg,) = overline([(out_and_back, {"slc": 3.0})])
        assert seg.values == {"slc": 6.0}

    def test_output_sorted_by_key(self):
        atoms = overline([([P3, P2, P1, P0], {"slc": 1.0})])
        assert [seg.key for seg in atoms] == sorted(seg.key for seg in atoms)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(route_coords, route_values), max_size=6), st.randoms())
    def test_matches_exact_oracle_in_any_order(self, routes, rnd):
        routes = [(c, v) for c, v in routes if len(atomize(c)) > 0]
        atoms = overline(routes)
        oracle = brute_force_overline(routes)
        assert {seg.key for seg in atoms} == set(oracle)
        for seg in atoms:
            for name, value in seg.values.items():
                # fsum is exactly rounded, so it must equal the rational sum.
                assert value == float(oracle[seg.key][name])
        shuffled = list(routes)
        rnd.shuffle(shuffled)
        assert overline(shuffled) == atoms

    def test_negative_values_rejected(self):
        with pytest.raises(ValidationError):
            overline([([P0, P1], {"slc": -1.0})])


class TestMerge:
    def test_equal_value_chain_merges(self):
        atoms = overline([([P0, P1, P2], {"slc": 5.0})])
        (merged,) = merge_contiguous(atoms)
        assert merged.geometry == (P0, P1, P2)
        assert merged.values == {"slc": 5.0}

    def test_value_change_breaks_chain(self):
        atoms = overline(
            [([P0, P1, P2], {"slc": 5.0}), ([P1, P2], {"slc": 2.0})]
        )
        merged = merge_contiguous(atoms)
        assert len(merged) == 2

    def test_junction_breaks_chain(self):
        fork = (0.001, 0.001)
        atoms = overline([([P0, P1, P2], {"slc": 5.0}), ([P1, fork], {"slc": 5.0})])
        merged = merge_contiguous(atoms)
        assert len(merged) == 3

    def test_closed_loop_becomes_ring(self):
        square = [P0, P1, (0.001, 0.001), (0.0, 0.001), P0]
        atoms = overline([(square, {"slc": 1.0})])
        (ring,) = merge_contiguous(atoms)
        assert ring.geometry[0] == ring.geometry[-1]
        assert len(ring.geometry) == 5

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(route_coords, route_values), max_size=6))
    def test_merge_conserves_length_and_totals(self, routes):
        routes = [(c, v) for c, v in routes if len(atomize(c)) > 0]
        atoms = overline(routes)
        merged = merge_contiguous(atoms)
        atom_len = sum(seg.length_km for seg in atoms)
        merged_len = sum(seg.length_km for seg in merged)
        assert merged_len == pytest.approx(atom_len, rel=1e-12, abs=1e-15)
        before = weighted_length_totals(atoms)
        after = weighted_length_totals(merged)
        assert set(before) == set(after)
        for name in before:
            assert after[name] == pytest.approx(before[name], rel=1e-9, abs=1e-12)


class TestSegments:
    def test_atomic_segment_must_be_ordered(self):
        a, b = quantize_point(P0), quantize_point(P1)
        with pytest.raises(ValidationError):
            AtomicSegment(b, a, {"slc": 1.0})
        with pytest.raises(ValidationError):
            AtomicSegment(a, a, {"slc": 1.0})

    def test_segment_length(self):
        a, b = quantize_point(P0), quantize_point(P1)
        seg = AtomicSegment(a, b, {"slc": 1.0})
        assert seg.length_km == segment_length_km((a, b))

    def test_network_segment_needs_two_points(self):
        with pytest.raises(ValidationError):
            NetworkSegment((P0,), {"slc": 1.0})


class TestGeoJSON:
    def test_properties_pass_through(self):
        atoms = overline([([P0, P1, P2], {"govtarget_slc": 5.5})])
        doc = network_geojson(merge_contiguous(atoms))
        assert doc["type"] == "FeatureCollection"
        (feature,) = doc["features"]
        assert feature["geometry"]["type"] == "LineString"
        assert feature["geometry"]["coordinates"][0] == [P0[0], P0[1]]
        assert feature["properties"] == {"govtarget_slc": 5.5}
