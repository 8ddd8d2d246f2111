"""Behavioral 1FeFET1R CAM simulator with an HDC genome search engine."""

from .device import (
    CellConfig,
    DeviceInstance,
    DeviceParams,
    cell_current,
    clamped_current,
    fet_current,
    mlc4_params,
    sample_device,
)
from .cam import (
    CamArray,
    CamWord,
    HammingDecode,
    MlReading,
    SearchQuery,
    SearchVoltageLadder,
    decode_hamming,
    decode_mlc_match,
    encode_query_binary,
    encode_query_mlc,
    make_ladder,
    search_word,
    two_step_search,
    write_word,
)
from .sensing import AdcConfig, SenseCost, sense_cost, stages_for_threshold, thermometer_code
from .montecarlo import (
    McExperimentConfig,
    McResult,
    run_bcam_sweep,
    run_limiter_ablation,
    run_mcam_worst_case,
)
from .hdc import (
    GenomeIndex,
    ItemMemory,
    QueryResult,
    build_index,
    build_item_memory,
    encode_kmer,
    oracle_match,
    query,
)

__version__ = "0.1.0"
