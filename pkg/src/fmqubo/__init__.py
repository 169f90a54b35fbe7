"""Surrogate-assisted binary optimization with factorization machines.

Trainable quadratic and cubic surrogates over one-hot encoded inputs,
extracted into QUBO form and minimized by simulated annealing, with an
optional learned slack block that perturbs retraining.  Includes the
dose-response data tooling and the evaluation metrics used by the
command-line driver.
"""

from .anneal import AnnealConfig, SolveResult, brute_force, solve
from .binopt import (
    HuboModel,
    IsingModel,
    QuboModel,
    ReductionResult,
    SlackBinding,
    add_one_hot_penalty,
    decode_integer,
    default_penalty_weight,
    encode_integer,
    hubo_to_text,
    ising_to_qubo,
    parse_hubo_text,
    parse_qubo_text,
    qubo_to_ising,
    qubo_to_text,
    reduce_hubo_to_qubo,
)
from .data import (
    BlackBox,
    EncodingSpec,
    ResponseRecord,
    Scenario1Dataset,
    Scenario2Dataset,
    SyntheticBlackBox,
    SyntheticDataset,
    TableBlackBox,
    combination_encoding,
    decode,
    drug_pool_encoding,
    encode,
    encode_values,
    group_combinations,
    load_records,
    make_synthetic_blackbox,
    make_table_blackbox,
    response_matrix,
    split_scenario1,
    split_scenario2,
    symmetrize,
)
from .engine import (
    FqexResult,
    GridCell,
    GridResult,
    IterationRecord,
    OptimizeResult,
    SurrogateConfig,
    count_nonzero_slack,
    fmqubo_optimize,
    fmqubos_optimize,
    fqex,
    fqm,
    grid_test,
    hofmqubo_optimize,
    stack_slack,
)
from .errors import (
    CapacityError,
    ConstantInputError,
    DimensionMismatchError,
    EncodingRangeError,
    FmQuboError,
    ParseError,
    TrainingDivergedError,
    UnknownCombinationError,
    ValidationError,
)
from .fm import (
    FmModel,
    HofmModel,
    TrainConfig,
    TrainResult,
    fm_init,
    fm_predict,
    fm_predict_batch,
    fm_to_qubo,
    fm_train,
    hofm_init,
    hofm_predict,
    hofm_predict_batch,
    hofm_to_hubo,
    hofm_train,
    load_model,
    save_model,
)
from .metrics import MetricSummary, mse_loss, pearson, spearman, summarize
from .seeding import derive_seed, rng_from

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # binary models
    "QuboModel", "IsingModel", "HuboModel", "ReductionResult", "SlackBinding",
    "qubo_to_ising", "ising_to_qubo", "reduce_hubo_to_qubo",
    "default_penalty_weight", "add_one_hot_penalty",
    "encode_integer", "decode_integer",
    "parse_qubo_text", "parse_hubo_text", "qubo_to_text", "hubo_to_text",
    # factorization machines
    "FmModel", "HofmModel", "TrainConfig", "TrainResult",
    "fm_init", "hofm_init", "fm_predict", "fm_predict_batch",
    "hofm_predict", "hofm_predict_batch", "fm_train", "hofm_train",
    "fm_to_qubo", "hofm_to_hubo", "save_model", "load_model",
    # solvers
    "AnnealConfig", "SolveResult", "solve", "brute_force",
    # surrogate loops
    "SurrogateConfig", "IterationRecord", "OptimizeResult", "FqexResult",
    "GridCell", "GridResult", "fqm", "fqex", "fmqubo_optimize",
    "hofmqubo_optimize", "fmqubos_optimize", "grid_test",
    "count_nonzero_slack", "stack_slack",
    # data
    "ResponseRecord", "EncodingSpec", "load_records", "encode",
    "encode_values", "decode", "combination_encoding", "drug_pool_encoding",
    "symmetrize", "split_scenario1", "split_scenario2", "response_matrix",
    "group_combinations", "BlackBox", "TableBlackBox", "SyntheticBlackBox",
    "make_table_blackbox", "make_synthetic_blackbox",
    "Scenario1Dataset", "Scenario2Dataset", "SyntheticDataset",
    # metrics
    "MetricSummary", "pearson", "spearman", "mse_loss", "summarize",
    # seeding
    "derive_seed", "rng_from",
    # errors
    "FmQuboError", "ValidationError", "DimensionMismatchError",
    "EncodingRangeError", "CapacityError", "TrainingDivergedError",
    "UnknownCombinationError", "ParseError", "ConstantInputError",
]
