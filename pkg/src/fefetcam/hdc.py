"""Hyperdimensional genome pattern matcher backed by the simulated CAM.

DNA k-mers are encoded as D-bit hypervectors by XOR-binding one random
item vector per alphabet symbol, cyclically rotated by the symbol's
position.  Every reference window gets one encoded entry, segmented into
64-bit CAM words; a query runs the two-step binary search on every segment,
decodes per-segment Hamming distances from the matchline currents and sums
them into the total distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cam import (
    CamWord,
    DEFAULT_M_GUARD,
    SearchQuery,
    SearchVoltageLadder,
    decode_hamming_arrays,
    make_ladder,
    two_step_search,
)
from .device import CellConfig, DeviceParams, clamped_current
from .errors import ConfigurationError, EncodingError, QueryError

ALPHABET = "ACGT"
SEGMENT_WORDLENGTH = 64
_PHILOX_MIX = 0x9E3779B97F4A7C15


def _rng(seed: int, salt: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(seed) * _PHILOX_MIX + salt) % (1 << 128)))


def hv_hamming(a: np.ndarray, b: np.ndarray) -> int:
    """Hamming distance between two bit vectors (uint8 0/1 arrays)."""
    return int(np.sum(a != b))


def _check_dimension(d: int):
    if d < 64 or d & (d - 1) != 0:
        raise ConfigurationError(f"dimension must be a power of two >= 64, got {d}")


@dataclass(frozen=True)
class ItemMemory:
    """Fixed random base hypervectors for A, C, G, T."""

    vectors: np.ndarray  # (4, D) uint8 bits
    seed: int

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def vector(self, base: str) -> np.ndarray:
        return self.vectors[ALPHABET.index(base)]


def build_item_memory(seed: int, d: int = 1024) -> ItemMemory:
    """Four independent uniform-random bit vectors, deterministic per seed.

    Redraws (deterministically) in the unlikely event a pair of vectors
    lands outside the D/2 +- 5*sqrt(D)/2 near-orthogonality band.
    """
    _check_dimension(d)
    half_width = 5.0 * np.sqrt(d) / 2.0
    for attempt in range(64):
        vecs = _rng(seed, attempt).integers(0, 2, size=(4, d), dtype=np.uint8)
        dists = [
            np.sum(vecs[i] != vecs[j]) for i in range(4) for j in range(i + 1, 4)
        ]
        if all(abs(x - d / 2) <= half_width for x in dists):
            return ItemMemory(vectors=vecs, seed=seed)
    raise ConfigurationError("could not draw a near-orthogonal item memory")


def _sequence_to_indices(seq: str, what: str) -> np.ndarray:
    arr = np.frombuffer(seq.encode("ascii", errors="replace"), dtype=np.uint8)
    idx = np.full(arr.shape, -1, dtype=np.int8)
    for i, base in enumerate(ALPHABET):
        idx[arr == ord(base)] = i
    bad = np.nonzero(idx < 0)[0]
    if bad.size:
        pos = int(bad[0])
        raise EncodingError(f"invalid character {seq[pos]!r} in {what} at position {pos}")
    return idx


def encode_kmer(seq: str, im: ItemMemory) -> np.ndarray:
    """XOR of the per-position rotated item vectors; position-sensitive."""
    idx = _sequence_to_indices(seq, "k-mer")
    h = np.zeros(im.dimension, dtype=np.uint8)
    for pos, base_idx in enumerate(idx):
        h ^= np.roll(im.vectors[base_idx], pos)
    return h


def _rotated_items(im: ItemMemory, k: int) -> np.ndarray:
    """(k, 4, D) table of item vectors pre-rotated by position."""
    rot = np.empty((k, 4, im.dimension), dtype=np.uint8)
    for pos in range(k):
        rot[pos] = np.roll(im.vectors, pos, axis=1)
    return rot


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack (..., D) bits into (..., D/64) uint64 words."""
    packed8 = np.packbits(bits, axis=-1)
    return packed8.view(np.uint64).reshape(bits.shape[:-1] + (bits.shape[-1] // 64,))

def unpack_bits(words: np.ndarray, d: int) -> np.ndarray:
    """Inverse of pack_bits."""
    packed8 = words.reshape(words.shape[:-1] + (-1,)).view(np.uint8)
    return np.unpackbits(packed8, axis=-1, count=d)


@dataclass
class PackedCamBank:
    """Binary CAM bank holding the segmented hypervectors in packed form.

    Each 64-bit segment occupies one CAM word; stored states are the
    hypervector bits.  Device V_TH offsets are materialized on demand from
    a per-word Philox stream (all zero when sigma_vth is zero), so desk
    scale indexes stay memory-light while individual words can still be
    inspected as full CamWord objects.
    """

    packed: np.ndarray  # (n_entries, n_segments) uint64
    params: DeviceParams
    cell: CellConfig
    seed: int

    @property
    def n_entries(self) -> int:
        return self.packed.shape[0]

    @property
    def n_segments(self) -> int:
        return self.packed.shape[1]

    @property
    def wordlength(self) -> int:
        return SEGMENT_WORDLENGTH

    def segment_bits(self, entry: int, segment: int) -> np.ndarray:
        word = self.packed[entry, segment : segment + 1]
        return unpack_bits(word, SEGMENT_WORDLENGTH)

    def entry_bits(self, entry: int) -> np.ndarray:
        """Reassembled hypervector of one entry."""
        return unpack_bits(self.packed[entry], self.n_segments * SEGMENT_WORDLENGTH)

    def eps_for(self, entry: int, segment: int) -> np.ndarray:
        if self.params.sigma_vth == 0.0:
            return np.zeros(SEGMENT_WORDLENGTH)
        word_index = entry * self.n_segments + segment
        rng = _rng(self.seed, 1 + word_index)
        return self.params.sigma_vth * rng.standard_normal(SEGMENT_WORDLENGTH)

    def word(self, entry: int, segment: int) -> CamWord:
        return CamWord(
            stored=self.segment_bits(entry, segment).astype(np.int64),
            eps=self.eps_for(entry, segment),
            cell=self.cell,
            params=self.params,
        )


@dataclass
class GenomeIndex:
    k: int
    dimension: int
    stride: int
    item_memory: ItemMemory
    bank: PackedCamBank
    positions: np.ndarray  # entry -> reference offset
    ladder: SearchVoltageLadder

    @property
    def n_entries(self) -> int:
        return self.bank.n_entries

    @property
    def segments_per_entry(self) -> int:
        return self.bank.n_segments


def encode_windows(reference_idx: np.ndarray, k: int, stride: int, im: ItemMemory) -> np.ndarray:
    """Packed encodings of every window start (0, stride, ...), chunked."""
    starts = np.arange(0, len(reference_idx) - k + 1, stride)
    windows = np.lib.stride_tricks.sliding_window_view(reference_idx, k)[starts]
    rot = _rotated_items(im, k)
    n_seg = im.dimension // 64
    out = np.empty((len(starts), n_seg), dtype=np.uint64)
    chunk = 4096
    pos = np.arange(k)
    for lo in range(0, len(starts), chunk):
        w = windows[lo : lo + chunk]
        gathered = rot[pos[np.newaxis, :], w]  # (chunk, k, D)
        bits = np.bitwise_xor.reduce(gathered, axis=1)
        out[lo : lo + len(w)] = pack_bits(bits)
    return out


def build_index(
    reference: str,
    k: int = 16,
    stride: int = 1,
    d: int = 1024,
    params: DeviceParams | None = None,
    cell: CellConfig | None = None,
    m_guard: float = DEFAULT_M_GUARD,
    seed: int = 7,
) -> GenomeIndex:
    """Encode every reference window and store it across CAM words."""
    _check_dimension(d)
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if stride < 1:
        raise ConfigurationError("stride must be >= 1")
    if len(reference) < k:
        raise ConfigurationError(
            f"reference length {len(reference)} shorter than k={k}"
        )
    if params is None:
        params = DeviceParams(sigma_vth=0.0)
    if cell is None:
        cell = CellConfig()
    ref_idx = _sequence_to_indices(reference, "reference")
    im = build_item_memory(seed, d)
    packed = encode_windows(ref_idx, k, stride, im)
    positions = np.arange(0, len(reference) - k + 1, stride)
    bank = PackedCamBank(packed=packed, params=params, cell=cell, seed=seed)
    return GenomeIndex(
        k=k,
        dimension=d,
        stride=stride,
        item_memory=im,
        bank=bank,
        positions=positions,
        ladder=make_ladder(params, m_guard),
    )


@dataclass
class QueryResult:
    matches: list[tuple[int, int]]  # (reference offset, decoded distance)
    threshold: int


def _current_lut(index: GenomeIndex):
    """Per-(stored bit, searched bit) cell currents for both steps.

    Valid for the uniform-device case (sigma_vth == 0): every cell with the
    same stored state sees the same current, so the matchline sums reduce
    to popcount-weighted sums of these four currents per step.
    """
    params, cell, ladder = index.bank.params, index.bank.cell, index.ladder
    levels = np.asarray(params.vth_levels)
    v_low = np.asarray(ladder.v_low)
    v_high = np.asarray(ladder.v_high)
    c1 = clamped_current(v_low[np.newaxis, :], levels[:, np.newaxis], cell, params)
    c2 = clamped_current(v_high[np.newaxis, :], levels[:, np.newaxis], cell, params)
    return c1, c2  # each (stored, searched)


def _segment_distances_fast(index: GenomeIndex, q_packed: np.ndarray) -> np.ndarray:
    """CAM-decoded per-entry distances via the uniform-device current sums."""
    w = index.bank.packed
    q = q_packed[np.newaxis, :]
    n = SEGMENT_WORDLENGTH
    n11 = np.bitwise_count(w & q).astype(np.float64)
    n01 = np.bitwise_count(~w & q).astype(np.float64)
    n10 = np.bitwise_count(w & ~q).astype(np.float64)
    n00 = n - n11 - n01 - n10
    c1, c2 = _current_lut(index)
    i1 = c1[1, 1] * n11 + c1[0, 1] * n01 + c1[1, 0] * n10 + c1[0, 0] * n00
    i2 = c2[1, 1] * n11 + c2[0, 1] * n01 + c2[1, 0] * n10 + c2[0, 0] * n00
    i_on = index.bank.cell.i_clamp
    _, _, hamming = decode_hamming_arrays(i1, i2, n, i_on)
    return hamming.sum(axis=1)


def _segment_distances_slow(index: GenomeIndex, q_bits: np.ndarray) -> np.ndarray:
    """Per-entry distances via explicit per-word two-step searches."""
    i_on = index.bank.cell.i_clamp
    ladder = index.ladder
    totals = np.empty(index.n_entries, dtype=np.int64)
    for e in range(index.n_entries):
        total = 0
        for s in range(index.segments_per_entry):
            word = index.bank.word(e, s)
            q_seg = q_bits[s * SEGMENT_WORDLENGTH : (s + 1) * SEGMENT_WORDLENGTH]
            reading = two_step_search(word, SearchQuery(tuple(int(b) for b in q_seg)), ladder)
            a, b, h = decode_hamming_arrays(reading.i_mls1, reading.i_mls2, SEGMENT_WORDLENGTH, i_on)
            total += int(h)
        totals[e] = total
    return totals


def cam_distances(index: GenomeIndex, pattern: str) -> np.ndarray:
    """CAM-decoded total distance between the pattern and every entry."""
    if len(pattern) != index.k:
        raise QueryError(f"pattern length {len(pattern)} != k={index.k}")
    h = encode_kmer(pattern, index.item_memory)
    if index.bank.params.sigma_vth == 0.0:
        return _segment_distances_fast(index, pack_bits(h))
    return _segment_distances_slow(index, h)


def query(index: GenomeIndex, pattern: str, threshold: int) -> QueryResult:
    """Entries whose decoded distance is within the threshold, sorted."""
    if not 0 <= threshold <= index.dimension:
        raise QueryError(f"threshold must be in [0, {index.dimension}]")
    dist = cam_distances(index, pattern)
    hit = np.nonzero(dist <= threshold)[0]
    matches = sorted(
        ((int(index.positions[e]), int(dist[e])) for e in hit),
        key=lambda m: (m[1], m[0]),
    )
    return QueryResult(matches=matches, threshold=threshold)


def oracle_match(reference: str, pattern: str) -> list[int]:
    """Naive exact substring scan; ground truth for threshold-0 queries."""
    offsets = []
    start = reference.find(pattern)
    while start != -1:
        offsets.append(start)
        start = reference.find(pattern, start + 1)
    return offsets


def read_fasta(text: str) -> str:
    """Concatenated sequence of a FASTA file; headers ignored, ACGT only."""
    parts = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(">"):
            continue
        parts.append(line.upper())
    seq = "".join(parts)
    if not seq:
        raise ConfigurationError("FASTA input contains no sequence data")
    _sequence_to_indices(seq, "FASTA sequence")
    return seq


def read_query_list(text: str) -> list[str]:
    """One pattern per line; blank lines ignored."""
    return [line.strip().upper() for line in text.splitlines() if line.strip()]
