"""Multi-relational text-graph contrastive learning with hierarchical
negative sifting, evaluated by semi-supervised document classification."""

from .contrast import (
    MODES,
    LossConfig,
    NegativeMask,
    SimilarityMatrix,
    mask_statistics,
    nhs_loss,
    nhs_loss_backward,
    nhs_select_negatives,
    sift_counts,
    similarity_matrix,
)
from .corpus import (
    BundleError,
    Corpus,
    DocumentFeatures,
    SyntheticSpec,
    generate_synthetic,
    load_bundle,
    save_bundle,
    split_views,
)
from .evaluate import (
    ExperimentResult,
    LrModel,
    MetricsReport,
    PipelineConfig,
    compute_metrics,
    predict,
    results_to_csv,
    results_to_json,
    run_ablation,
    run_experiment,
    run_label_rate_sweep,
    run_sensitivity_sweep,
    train_lr,
)
from .graph import (
    RELATIONS,
    MultiRelationalTextGraph,
    RelationAdjacency,
    ThresholdConfig,
    build_association_relation,
    build_graph,
    build_title_relation,
    cosine_similarity,
    count_matching_pairs,
    separate,
)
from .model import (
    ArchitectureSpec,
    CganParams,
    Gradients,
    LinearMap,
    ModelParameters,
    ProjectionParams,
    RwGcnLayerParams,
    cgan_forward,
    finite_difference_gradient,
    init_parameters,
    project,
    rwgcn_forward,
    rwgcn_stack,
)
from .train import (
    DivergenceError,
    EpochRecord,
    OptimizerState,
    TrainConfig,
    adam_step,
    encode,
    load_checkpoint,
    pipeline_loss,
    pipeline_loss_and_gradients,
    pretrain,
    save_checkpoint,
    write_log_csv,
)

__version__ = "0.1.0"
