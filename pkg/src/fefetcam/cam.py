"""CAM words, arrays, the two-step search protocol and its decoders.

A CAM word is N 1FeFET1R cells sharing one matchline; the matchline current
is the plain sum of the cell currents.  Searching runs in two steps:

* step 1 drives each cell with a voltage just below the threshold of the
  searched symbol, so only cells whose stored threshold lies *below* the
  searched one conduct (St0Sr1 in binary terms);
* step 2 drives each cell just above the searched symbol's threshold, so
  every cell conducts except those whose stored threshold lies *above* it
  (St1Sr0 in binary terms).

For binary words the two step currents decode to the two mismatch counts
and hence the Hamming distance; for multi-level words they decode to an
exact-match flag.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .device import CellConfig, DeviceInstance, DeviceParams, clamped_current
from .errors import ConfigurationError, InvalidWriteError, QueryError

DEFAULT_M_GUARD = 0.3


@dataclass(frozen=True)
class SearchVoltageLadder:
    """Per-symbol search voltages for the two steps.

    v_low[s] sits below the threshold of state s (step 1), v_high[s] above
    it (step 2).  Interior voltages are midpoints between adjacent levels;
    the two edge voltages sit m_guard beyond the outermost levels.  For a
    binary ladder this reduces to the classic three voltages
    vsl1 = v_low[0], vsl2 = v_low[1] = v_high[0], vsl3 = v_high[1].
    """

    v_low: tuple[float, ...]
    v_high: tuple[float, ...]

    @property
    def n_symbols(self) -> int:
        return len(self.v_low)

    @property
    def is_binary(self) -> bool:
        return self.n_symbols == 2

    @property
    def vsl1(self) -> float:
        return self.v_low[0]

    @property
    def vsl2(self) -> float:
        return self.v_low[1]

    @property
    def vsl3(self) -> float:
        return self.v_high[-1]


def make_ladder(params: DeviceParams, m_guard: float = DEFAULT_M_GUARD) -> SearchVoltageLadder:
    """Place search voltages by the midpoint rule with guard margin m_guard."""
    if m_guard <= 0:
        raise ConfigurationError("m_guard must be > 0")
    vth = params.vth_levels
    if any(b - a <= 2 * m_guard for a, b in zip(vth, vth[1:])):
        raise ConfigurationError(
            f"vth levels {vth} closer than 2*m_guard={2 * m_guard:g}; "
            "reduce m_guard or spread the levels"
        )
    mids = [0.5 * (a + b) for a, b in zip(vth, vth[1:])]
    v_low = tuple([vth[0] - m_guard] + mids)
    v_high = tuple(mids + [vth[-1] + m_guard])
    return SearchVoltageLadder(v_low=v_low, v_high=v_high)


@dataclass(frozen=True)
class SearchQuery:
    """A query: one stored-alphabet symbol per cell (bits in binary mode)."""

    symbols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class MlReading:
    """Matchline currents of the two search steps."""

    i_mls1: float
    i_mls2: float


@dataclass(frozen=True)
class HammingDecode:
    n_st0sr1: int
    n_st1sr0: int
    hamming: int


@dataclass
class CamWord:
    """One matchline: per-cell stored states and V_TH offsets.

    Cells are held as numpy arrays (stored state index and rigid V_TH
    offset per device); the `cells` property materializes DeviceInstance
    views for single-cell inspection.
    """

    stored: np.ndarray
    eps: np.ndarray
    cell: CellConfig
    params: DeviceParams

    def __post_init__(self):
        self.stored = np.asarray(self.stored, dtype=np.int64)
        self.eps = np.asarray(self.eps, dtype=float)
        if self.stored.shape != self.eps.shape or self.stored.ndim != 1:
            raise ConfigurationError("stored and eps must be 1-D and same length")
        if len(self.stored) < 1:
            raise ConfigurationError("word needs at least one cell")
        if np.any((self.stored < 0) | (self.stored >= self.params.n_levels)):
            raise InvalidWriteError("stored state out of range")

    @classmethod
    def from_cells(cls, cells: list[DeviceInstance], cell: CellConfig, params: DeviceParams) -> "CamWord":
        stored = np.array([c.stored_state for c in cells])
        eps = np.array([c.sampled_vth[0] - params.vth_levels[0] for c in cells])
        return cls(stored=stored, eps=eps, cell=cell, params=params)

    @property
    def n(self) -> int:
        return len(self.stored)

    @property
    def cells(self) -> list[DeviceInstance]:
        levels = np.asarray(self.params.vth_levels)
        return [
            DeviceInstance(sampled_vth=tuple(levels + e), stored_state=int(s))
            for s, e in zip(self.stored, self.eps)
        ]

    def vth(self) -> np.ndarray:
        """Per-cell threshold of the stored state."""
        levels = np.asarray(self.params.vth_levels)
        return levels[self.stored] + self.eps


@dataclass
class CamArray:
    """A bank of CAM words with uniform wordlength and shared parameters."""

    stored: np.ndarray  # (M, N) state indices
    eps: np.ndarray  # (M, N) per-device V_TH offsets
    cell: CellConfig
    params: DeviceParams

    def __post_init__(self):
        self.stored = np.asarray(self.stored, dtype=np.int64)
        self.eps = np.asarray(self.eps, dtype=float)
        if self.stored.shape != self.eps.shape or self.stored.ndim != 2:
            raise ConfigurationError("stored and eps must be (M, N) and same shape")
        if np.any((self.stored < 0) | (self.stored >= self.params.n_levels)):
            raise InvalidWriteError("stored state out of range")

    @classmethod
    def build(
        cls,
        params: DeviceParams,
        cell: CellConfig,
        n_words: int,
        wordlength: int,
        seed: int = 0,
    ) -> "CamArray":
        """Fresh array of all-zero words with sampled device offsets."""
        rng = np.random.Generator(np.random.Philox(key=int(seed) % (1 << 128)))
        eps = params.sigma_vth * rng.standard_normal((n_words, wordlength))
        stored = np.zeros((n_words, wordlength), dtype=np.int64)
        return cls(stored=stored, eps=eps, cell=cell, params=params)

    @property
    def n_words(self) -> int:
        return self.stored.shape[0]

    @property
    def wordlength(self) -> int:
        return self.stored.shape[1]

    def word(self, row: int) -> CamWord:
        return CamWord(
            stored=self.stored[row].copy(),
            eps=self.eps[row].copy(),
            cell=self.cell,
            params=self.params,
        )


def write_word(array: CamArray, row: int, symbols, fresh_devices: bool = False, seed: int = 0) -> CamArray:
    """Program one row; device identity is kept unless fresh_devices is set."""
    if not 0 <= row < array.n_words:
        raise InvalidWriteError(f"row {row} out of range")
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.shape != (array.wordlength,):
        raise InvalidWriteError(
            f"expected {array.wordlength} symbols, got {symbols.shape}"
        )
    if np.any((symbols < 0) | (symbols >= array.params.n_levels)):
        raise InvalidWriteError("symbol out of range for the stored alphabet")
    array.stored[row] = symbols
    if fresh_devices:
        rng = np.random.Generator(np.random.Philox(key=(int(seed) + row) % (1 << 128)))
        array.eps[row] = array.params.sigma_vth * rng.standard_normal(array.wordlength)
    return array


def _check_mode(query: SearchQuery, ladder: SearchVoltageLadder, binary: bool):
    if binary and not ladder.is_binary:
        raise QueryError("binary encoding requires a 2-level ladder")
    if not binary and ladder.is_binary:
        raise QueryError("multilevel encoding requires a >2-level ladder")
    if any(s < 0 or s >= ladder.n_symbols for s in query.symbols):
        raise QueryError("query symbol outside the stored alphabet")


def encode_query_binary(query: SearchQuery, ladder: SearchVoltageLadder):
    """Bit b maps to (vsl1, vsl2) for 0 and (vsl2, vsl3) for 1."""
    _check_mode(query, ladder, binary=True)
    sym = np.asarray(query.symbols)
    step1 = np.asarray(ladder.v_low)[sym]
    step2 = np.asarray(ladder.v_high)[sym]
    return step1, step2


def encode_query_mlc(query: SearchQuery, ladder: SearchVoltageLadder):
    """Symbol s maps to (v_low[s], v_high[s])."""
    _check_mode(query, ladder, binary=False)
    sym = np.asarray(query.symbols)
    step1 = np.asarray(ladder.v_low)[sym]
    step2 = np.asarray(ladder.v_high)[sym]
    return step1, step2


def search_word(word: CamWord, step_voltages) -> float:
    """Matchline current: sum of the parallel cell currents."""
    vg = np.asarray(step_voltages, dtype=float)
    if vg.shape != (word.n,):
        raise QueryError(f"expected {word.n} step voltages, got {vg.shape}")
    currents = clamped_current(vg, word.vth(), word.cell, word.params)
    return float(np.sum(currents))


def two_step_search(word: CamWord, query: SearchQuery, ladder: SearchVoltageLadder) -> MlReading:
    """Run both search steps; the stored word is left untouched."""
    if len(query) != word.n:
        raise QueryError("query length does not match wordlength")
    if ladder.is_binary:
        step1, step2 = encode_query_binary(query, ladder)
    else:
        step1, step2 = encode_query_mlc(query, ladder)
    return MlReading(
        i_mls1=search_word(word, step1),
        i_mls2=search_word(word, step2),
    )


def search_array(array: CamArray, query: SearchQuery, ladder: SearchVoltageLadder):
    """Two-step search of every word against one query; returns (i1, i2) arrays."""
    if len(query) != array.wordlength:
        raise QueryError("query length does not match wordlength")
    if ladder.is_binary:
        step1, step2 = encode_query_binary(query, ladder)
    else:
        step1, step2 = encode_query_mlc(query, ladder)
    levels = np.asarray(array.params.vth_levels)
    vth = levels[array.stored] + array.eps
    i1 = clamped_current(step1[np.newaxis, :], vth, array.cell, array.params).sum(axis=1)
    i2 = clamped_current(step2[np.newaxis, :], vth, array.cell, array.params).sum(axis=1)
    return i1, i2


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def decode_hamming(reading: MlReading, n: int, i_on_nominal: float) -> HammingDecode:
    """Decode the two step currents into mismatch counts and Hamming distance."""
    if i_on_nominal <= 0:
        raise ConfigurationError("i_on_nominal must be > 0")
    n_st0sr1 = int(np.clip(_round_half_up(reading.i_mls1 / i_on_nominal), 0, n))
    n_st1sr0 = int(np.clip(_round_half_up(n - reading.i_mls2 / i_on_nominal), 0, n))
    return HammingDecode(n_st0sr1=n_st0sr1, n_st1sr0=n_st1sr0, hamming=n_st0sr1 + n_st1sr0)


def decode_hamming_arrays(i_mls1, i_mls2, n: int, i_on_nominal: float):
    """Vectorized decode; returns (n_st0sr1, n_st1sr0, hamming) int arrays."""
    if i_on_nominal <= 0:
        raise ConfigurationError("i_on_nominal must be > 0")
    a = np.clip(_round_half_up(np.asarray(i_mls1) / i_on_nominal), 0, n).astype(np.int64)
    b = np.clip(_round_half_up(n - np.asarray(i_mls2) / i_on_nominal), 0, n).astype(np.int64)
    return a, b, a + b


def decode_mlc_match(reading: MlReading, n: int, i_on_nominal: float, margin_fraction: float = 0.4) -> bool:
    """Exact match: low step-1 current and near-full step-2 current."""
    if not 0 < margin_fraction < 0.5:
        raise ConfigurationError("margin_fraction must be in (0, 0.5)")
    return bool(
        reading.i_mls1 < margin_fraction * i_on_nominal
        and reading.i_mls2 > (n - margin_fraction) * i_on_nominal
    )


def array_to_csv(array: CamArray) -> str:
    """One row per word, one stored symbol per column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in array.stored:
        writer.writerow(int(s) for s in row)
    return buf.getvalue()


def array_from_csv(text: str, params: DeviceParams, cell: CellConfig, seed: int = 0) -> CamArray:
    """Rebuild an array from exported symbols, sampling fresh devices."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ConfigurationError("empty CSV")
    try:
        stored = np.array([[int(v) for v in r] for r in rows], dtype=np.int64)
    except ValueError as exc:
        raise ConfigurationError(f"non-integer symbol in CSV: {exc}") from exc
    array = CamArray.build(params, cell, stored.shape[0], stored.shape[1], seed=seed)
    if np.any((stored < 0) | (stored >= params.n_levels)):
        raise InvalidWriteError("symbol out of range in CSV")
    array.stored = stored
    return array
