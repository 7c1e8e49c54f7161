"""Point-set similarity toolkit.

Chamfer, Hausdorff, Earth Mover's, and density-aware Chamfer distances with
per-point breakdowns and analytic gradients, plus seeded degradation
generators, a sensitivity-sweep harness, and score-guided down-sampling.
"""

__version__ = "0.1.0"

from .cloud import (
    NeighborIndex,
    Point3,
    PointCloud,
    as_cloud,
    build_index,
    fps,
    fps_indices,
    mean_nn_spacing,
    nearest,
)
from .degrade import (
    DegradationSpec,
    curvature_mix_sample,
    inject_outliers,
    mix_noise_imbalance,
    synth_shapes,
)
from .dsample import (
    ConstantScorer,
    OracleScorer,
    SamplerParams,
    ScoredCloud,
    Scorer,
    calibrate_t,
    existence_prob,
    g_target,
    get_scorer,
    guided_downsample,
    score_loss,
)
from .errors import (
    CardinalityMismatchError,
    CloudParseError,
    EmptyCloudError,
    InsufficientPointsError,
    InvalidCountError,
    NonFiniteError,
    PointCloudError,
    ShapeMismatchError,
    SizeLimitExceededError,
)
from .gradients import (
    GradientField,
    check_gradient,
    finite_difference_grad,
    gradient_profile,
    loss_and_grad,
    loss_value,
)
from .cloudio import read_cloud, write_cloud
from .metrics import (
    DcdParams,
    MetricReport,
    QueryFrequency,
    chamfer,
    dcd,
    dcd_unequal,
    hausdorff,
    query_frequencies,
)
from .reports import (
    AccumulationCurve,
    BenchReport,
    SweepConfig,
    SweepReport,
    accumulation_curve,
    kendall_tau,
    run_bench,
    run_sweep,
)
from .transport import AssignmentResult, emd_approx, emd_exact, emd_value

__all__ = [name for name in dir() if not name.startswith("_")]
