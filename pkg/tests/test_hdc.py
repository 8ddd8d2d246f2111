import numpy as np
import pytest

from fefetcam.device import CellConfig, DeviceParams
from fefetcam.errors import ConfigurationError, EncodingError, QueryError
from fefetcam.hdc import (
    ALPHABET,
    SEGMENT_WORDLENGTH,
    build_index,
    build_item_memory,
    cam_distances,
    encode_kmer,
    hv_hamming,
    oracle_match,
    pack_bits,
    query,
    read_fasta,
    read_query_list,
    unpack_bits,
)

D = 1024


@pytest.fixture(scope="module")
def im():
    return build_item_memory(seed=7, d=D)


class TestItemMemory:
    def test_deterministic(self, im):
        again = build_item_memory(seed=7, d=D)
        assert np.array_equal(im.vectors, again.vectors)

    def test_seed_sensitivity(self, im):
        other = build_item_memory(seed=8, d=D)
        assert not np.array_equal(im.vectors, other.vectors)

    def test_pairwise_near_orthogonal(self, im):
        band = 5.0 * np.sqrt(D) / 2.0
        for i in range(4):
            for j in range(i + 1, 4):
                d = hv_hamming(im.vectors[i], im.vectors[j])
                assert abs(d - D / 2) <= band

    def test_bits_are_binary(self, im):
        assert im.vectors.shape == (4, D)
        assert set(np.unique(im.vectors)) <= {0, 1}

    @pytest.mark.parametrize("bad", [48, 100, 32, 0])
    def test_dimension_must_be_power_of_two_ge_64(self, bad):
        with pytest.raises(ConfigurationError):
            build_item_memory(seed=1, d=bad)

    def test_minimum_dimension_accepted(self):
        assert build_item_memory(seed=1, d=64).dimension == 64


class TestEncodeKmer:
    def test_single_base_is_item_vector(self, im):
        for base in ALPHABET:
            assert np.array_equal(encode_kmer(base, im), im.vector(base))

    def test_position_sensitive(self, im):
        assert hv_hamming(encode_kmer("AC", im), encode_kmer("CA", im)) > 0

    def test_self_distance_zero(self, im):
        a = encode_kmer("ACGTACGTACGTACGT", im)
        b = encode_kmer("ACGTACGTACGTACGT", im)
        assert hv_hamming(a, b) == 0

    def test_single_substitution_distance_near_half(self, im):
        # a one-base edit replaces one bound vector: the encodings differ by
        # hamming(rot(item_x), rot(item_y)) which concentrates around D/2
        rng = np.random.default_rng(4)
        dists = []
        for _ in range(50):
            kmer = "".join(rng.choice(list(ALPHABET), size=16))
            pos = int(rng.integers(0, 16))
            other = rng.choice([b for b in ALPHABET if b != kmer[pos]])
            mutated = kmer[:pos] + other + kmer[pos + 1 :]
            dists.append(hv_hamming(encode_kmer(kmer, im), encode_kmer(mutated, im)))
        assert 472 <= np.mean(dists) <= 552

    def test_random_kmer_pairs_concentrate(self, im):
        rng = np.random.default_rng(5)
        dists = []
        for _ in range(200):
            a = "".join(rng.choice(list(ALPHABET), size=16))
            b = "".join(rng.choice(list(ALPHABET), size=16))
            if a == b:
                continue
            dists.append(hv_hamming(encode_kmer(a, im), encode_kmer(b, im)))
        lo, hi = D / 2 - 3 * np.sqrt(D), D / 2 + 3 * np.sqrt(D)
        assert lo <= np.mean(dists) <= hi

    def test_invalid_character_reports_position(self, im):
        with pytest.raises(EncodingError, match="position 2"):
            encode_kmer("ACNA", im)


class TestPacking:
    def test_round_trip(self):
        rng = np.random.default_rng(11)
        bits = rng.integers(0, 2, size=(5, 256), dtype=np.uint8)
        packed = pack_bits(bits)
        assert packed.shape == (5, 4)
        assert np.array_equal(unpack_bits(packed, 256), bits)


class TestBuildIndex:
    def test_window_count_and_positions(self):
        ref = "".join(np.random.default_rng(2).choice(list(ALPHABET), size=100))
        idx = build_index(ref, k=16, stride=1, d=D, seed=7)
        assert idx.n_entries == 85
        assert np.array_equal(idx.positions, np.arange(85))
        assert idx.segments_per_entry == D // SEGMENT_WORDLENGTH

    def test_stride(self):
        ref = "".join(np.random.default_rng(2).choice(list(ALPHABET), size=100))
        idx = build_index(ref, k=16, stride=4, d=D, seed=7)
        assert np.array_equal(idx.positions, np.arange(0, 85, 4))

    def test_reference_too_short(self):
        with pytest.raises(ConfigurationError):
            build_index("ACGT", k=16)

    def test_entries_match_direct_encoding(self):
        ref = "".join(np.random.default_rng(3).choice(list(ALPHABET), size=200))
        idx = build_index(ref, k=16, stride=1, d=D, seed=7)
        for e in (0, 1, 50, idx.n_entries - 1):
            window = ref[e : e + 16]
            assert np.array_equal(idx.bank.entry_bits(e), encode_kmer(window, idx.item_memory))

    def test_segment_word_reassembly(self):
        ref = "".join(np.random.default_rng(3).choice(list(ALPHABET), size=40))
        idx = build_index(ref, k=16, stride=1, d=128, seed=7)
        bits = np.concatenate(
            [idx.bank.segment_bits(0, s) for s in range(idx.segments_per_entry)]
        )
        assert np.array_equal(bits, idx.bank.entry_bits(0))


@pytest.fixture(scope="module")
def ref():
    return "".join(np.random.default_rng(9).choice(list(ALPHABET), size=1000))


@pytest.fixture(scope="module")
def idx(ref):
    return build_index(ref, k=16, stride=1, d=D, seed=7)


class TestQuery:
    def test_planted_patterns_found_exactly(self, ref, idx):
        rng = np.random.default_rng(10)
        for _ in range(10):
            off = int(rng.integers(0, len(ref) - 16))
            pattern = ref[off : off + 16]
            res = query(idx, pattern, threshold=0)
            assert [m[0] for m in res.matches] == oracle_match(ref, pattern)
            assert all(d == 0 for _, d in res.matches)

    def test_absent_pattern_empty_at_zero(self, ref, idx):
        pattern = "A" * 16
        assume_absent = oracle_match(ref, pattern) == []
        assert assume_absent  # 16 consecutive As are vanishingly unlikely here
        assert query(idx, pattern, threshold=0).matches == []

    def test_threshold_d_returns_everything(self, idx):
        res = query(idx, "ACGT" * 4, threshold=D)
        assert len(res.matches) == idx.n_entries

    def test_matches_sorted_by_distance_then_offset(self, idx):
        res = query(idx, "ACGT" * 4, threshold=D)
        keys = [(d, o) for o, d in res.matches]
        assert keys == sorted(keys)

    def test_threshold_validation(self, idx):
        with pytest.raises(QueryError):
            query(idx, "ACGT" * 4, threshold=-1)
        with pytest.raises(QueryError):
            query(idx, "ACGT" * 4, threshold=D + 1)

    def test_pattern_length_validation(self, idx):
        with pytest.raises(QueryError):
            cam_distances(idx, "ACGT")

    def test_cam_distance_equals_software_hamming(self, ref, idx):
        rng = np.random.default_rng(12)
        for _ in range(5):
            pattern = "".join(rng.choice(list(ALPHABET), size=16))
            h = encode_kmer(pattern, idx.item_memory)
            software = np.array(
                [hv_hamming(idx.bank.entry_bits(e), h) for e in range(idx.n_entries)]
            )
            assert np.array_equal(cam_distances(idx, pattern), software)


class TestVariationPath:
    def test_slow_path_agrees_with_software_at_small_sigma(self):
        ref = "".join(np.random.default_rng(20).choice(list(ALPHABET), size=30))
        params = DeviceParams(sigma_vth=0.02)
        idx = build_index(ref, k=16, stride=1, d=128, params=params, seed=7)
        pattern = ref[3:19]
        h = encode_kmer(pattern, idx.item_memory)
        software = np.array(
            [hv_hamming(idx.bank.entry_bits(e), h) for e in range(idx.n_entries)]
        )
        assert np.array_equal(cam_distances(idx, pattern), software)

    def test_eps_deterministic_and_word_local(self):
        ref = "ACGTACGTACGTACGTACGT"
        params = DeviceParams(sigma_vth=0.05)
        idx = build_index(ref, k=16, stride=1, d=128, params=params, seed=7)
        a = idx.bank.eps_for(0, 0)
        assert np.array_equal(a, idx.bank.eps_for(0, 0))
        assert not np.array_equal(a, idx.bank.eps_for(0, 1))
        assert not np.array_equal(a, idx.bank.eps_for(1, 0))


class TestOracleMatch:
    def test_basic_overlapping(self):
        assert oracle_match("TTACGACG", "ACG") == [2, 5]

    def test_overlap_counted(self):
        assert oracle_match("AAAA", "AA") == [0, 1, 2]

    def test_absent(self):
        assert oracle_match("ACGT", "GG") == []


class TestInputParsing:
    def test_fasta_headers_stripped_and_joined(self):
        text = ">chr1 test\nACGT\nacgt\n>chr2\nTTTT\n"
        assert read_fasta(text) == "ACGTACGTTTTT"

    def test_fasta_empty_rejected(self):
        with pytest.raises(ConfigurationError):
            read_fasta(">only a header\n")

    def test_fasta_invalid_base_rejected(self):
        with pytest.raises(EncodingError):
            read_fasta(">h\nACGN\n")

    def test_query_list(self):
        assert read_query_list("acgt\n\nTTTT \n") == ["ACGT", "TTTT"]
