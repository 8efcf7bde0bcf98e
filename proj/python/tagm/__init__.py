"""Joint clustering and network estimation for multivariate time series.

States follow a hidden Markov chain; each state emits from a Gaussian whose
precision matrix is fit with an L1 penalty, so the per-state conditional
dependence graphs come out sparse.
"""

from ._core import (
    BicReport,
    ConsensusReport,
    EStepResult,
    FitResult,
    IncState,
    IncStepRecord,
    InputError,
    IoError,
    KCandidate,
    KSelection,
    LambdaCandidate,
    LambdaSelection,
    ModelError,
    ModelParams,
    NetworkScore,
    SyntheticDataset,
    TrueParams,
    __version__,
    bic,
    count_free_params,
    fit,
    forward_backward,
    generate,
    graph_from_precision,
    inc_init,
    load_model,
    mae,
    map_clusters,
    mcc,
    mem_fit,
    network_score,
    predict_next,
    read_csv,
    save_model,
    select_k,
    select_lambda,
    solve_glasso,
    stability,
    v_measure,
    write_csv,
)

__all__ = [
    "BicReport",
    "ConsensusReport",
    "EStepResult",
    "FitResult",
    "IncState",
    "IncStepRecord",
    "InputError",
    "IoError",
    "KCandidate",
    "KSelection",
    "LambdaCandidate",
    "LambdaSelection",
    "ModelError",
    "ModelParams",
    "NetworkScore",
    "SyntheticDataset",
    "TrueParams",
    "__version__",
    "bic",
    "count_free_params",
    "fit",
    "forward_backward",
    "generate",
    "graph_from_precision",
    "inc_init",
    "load_model",
    "mae",
    "map_clusters",
    "mcc",
    "mem_fit",
    "network_score",
    "predict_next",
    "read_csv",
    "save_model",
    "select_k",
    "select_lambda",
    "solve_glasso",
    "stability",
    "v_measure",
    "write_csv",
]
