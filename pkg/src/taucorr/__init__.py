"""All-pairs Kendall tau-a/tau-b correlation engine.

Three interchangeable pairwise kernels (branch-free quadratic, merge-sort,
and vectorized merge-sort over packed rank pairs) driven by a tiled,
multi-pass, statically scheduled parallel engine over the upper triangle
of the pair matrix.
"""

from .errors import (
    CapacityExceededError,
    ConfigError,
    InvalidInputError,
    ParseError,
    TauCorrError,
)
from .result import TauResult, derive_taus, result_from_counts
from .ranks import (
    PACK_MAX_N,
    PACK_MAX_RANK,
    mask_low_half,
    pack_pairs,
    rank_transform,
    unpack_pairs,
)
from .kernel_naive import sign3, tau_a_naive
from .kernel_sorted import count_discordant, joint_tie_sum, sort_joint, tau_b_sorted, tie_sum
from .kernel_vectorized import (
    LANE_WIDTH,
    SIMD_LANES,
    bitonic_merge_pair,
    merge_leftover,
    tau_b_vectorized,
    vse_merge,
)
from .pairindex import JobSpace, job_coord, job_id, row_prefix, shard_range, tile_coord, tile_id
from .engine import (
    CELL_DTYPE,
    CellResult,
    Dataset,
    PassPlan,
    RunSummary,
    cell_results,
    compute_all_pairs,
    plan_passes,
)
from .dataio import (
    BinaryWriter,
    TsvWriter,
    load_matrix,
    read_binary,
    render_tsv_lines,
    synth_dataset,
)
from .cli import run_cli

__version__ = "0.1.0"

__all__ = [
    "BinaryWriter",
    "CELL_DTYPE",
    "CapacityExceededError",
    "CellResult",
    "ConfigError",
    "Dataset",
    "InvalidInputError",
    "JobSpace",
    "LANE_WIDTH",
    "PACK_MAX_N",
    "PACK_MAX_RANK",
    "ParseError",
    "PassPlan",
    "RunSummary",
    "SIMD_LANES",
    "TauCorrError",
    "TauResult",
    "TsvWriter",
    "bitonic_merge_pair",
    "cell_results",
    "compute_all_pairs",
    "count_discordant",
    "derive_taus",
    "job_coord",
    "job_id",
    "joint_tie_sum",
    "load_matrix",
    "mask_low_half",
    "merge_leftover",
    "pack_pairs",
    "plan_passes",
    "rank_transform",
    "read_binary",
    "render_tsv_lines",
    "result_from_counts",
    "row_prefix",
    "run_cli",
    "shard_range",
    "sign3",
    "sort_joint",
    "synth_dataset",
    "tau_a_naive",
    "tau_b_sorted",
    "tau_b_vectorized",
    "tie_sum",
    "tile_coord",
    "tile_id",
    "unpack_pairs",
    "vse_merge",
]
