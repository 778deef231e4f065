"""Noisy quantum walk transfer-efficiency pipeline.

Thin re-export of the compiled core: graph construction, Lindblad and
classical walk integration, transfer-efficiency labeling, dataset
generation, and the cross-filter CNN classifier.
"""

from ._core import (
    CqcnnModel,
    CurveResult,
    Dataset,
    DatasetFlags,
    Graph,
    IntegrationError,
    IntegrationParams,
    LabeledExample,
    LindbladSpec,
    Prediction,
    RateConvention,
    SweepResult,
    TrainConfig,
    TrainHistory,
    Trajectory,
    TransferOutcome,
    WalkSetup,
    adjacency_matrix,
    classical_generator,
    classical_propagate_exact,
    detection_threshold,
    first_crossing,
    forward,
    generate_dataset,
    init_model,
    integrate_classical,
    integrate_quantum,
    label_walk,
    lindblad_rhs,
    load_dataset,
    load_models,
    make_cycle,
    pad_matrix,
    parse_graph,
    parse_setup,
    predict_curve,
    predict_ensemble,
    save_dataset,
    save_models,
    split_exclude,
    sweep_ground_truth,
    train,
    train_ensemble,
    transition_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
