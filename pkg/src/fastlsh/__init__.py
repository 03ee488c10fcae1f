"""Locality-sensitive hashing by random sampling plus random projection.

Modules
-------
hashing
    Elementary FastLSH, E2LSH and ACHash functions, sampling plans, composite
    keys and the MIPS transforms; sklearn-style hasher families.
theory
    Collision probabilities, characteristic functions, densities, moments
    and rho(c), with Monte Carlo oracles.
index
    Multi-table LSH index with exact re-ranking and a binary file format.
data
    fvecs/ivecs I/O, synthetic data, exact ground truth, pair statistics.
bench
    Experiment runner and report emission.
"""

from . import bench, data, hashing, index, theory
from .data import Dataset, brute_force_knn, gen_synthetic, pair_stats, read_fvecs, write_fvecs
from .exceptions import (ConfigError, FormatError, InvalidArgumentError,
                         NumericFailureError, UndefinedRhoError)
from .hashing import (ACHasher, E2LSHHasher, FastLSHHasher, HasherParams, MipsTransform,
                      SamplingPlan, Scheme, apply_sampling, make_hasher, make_sampling_plan)
from .index import IndexConfig, LSHIndex, QueryResult, build_index, recall_at_k
from .theory import (CollisionModel, QuadratureConfig, collision_prob_e2lsh,
                     collision_prob_fast, collision_prob_mips, collision_prob_mixture,
                     moments_stx, rho_curve)

__version__ = "0.1.0"

__all__ = [
    "bench", "data", "hashing", "index", "theory",
    "Dataset", "brute_force_knn", "gen_synthetic", "pair_stats", "read_fvecs", "write_fvecs",
    "ConfigError", "FormatError", "InvalidArgumentError", "NumericFailureError",
    "UndefinedRhoError",
    "ACHasher", "E2LSHHasher", "FastLSHHasher", "HasherParams", "MipsTransform",
    "SamplingPlan", "Scheme", "apply_sampling", "make_hasher", "make_sampling_plan",
    "IndexConfig", "LSHIndex", "QueryResult", "build_index", "recall_at_k",
    "CollisionModel", "QuadratureConfig", "collision_prob_e2lsh", "collision_prob_fast",
    "collision_prob_mips", "collision_prob_mixture", "moments_stx", "rho_curve",
]
