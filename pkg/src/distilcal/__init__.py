"""distilcal: distillation targets and losses, top-N calibration, temperature scaling.

The package is organized by pipeline stage:

* :mod:`distilcal.probs` - stable softmax/log-softmax and top-N extraction;
* :mod:`distilcal.calibration` - rank-N expected calibration error with
  confidence-sorted equal-count bins, reliability CSV export;
* :mod:`distilcal.targets` - one-hot, smoothed, softened, interpolated targets;
* :mod:`distilcal.losses` - cross-entropy, distillation, label-interpolation,
  and multi-task losses with analytic gradients plus a finite-difference check;
* :mod:`distilcal.tempscale` - post-hoc temperature fitting and two-stream
  score combination;
* :mod:`distilcal.alignment` - deduplication/rearrangement of frame labels
  into per-frame multi-teacher supervision;
* :mod:`distilcal.toy` - a tiny multi-head classifier with hand-written
  backprop for end-to-end experiments;
* :mod:`distilcal.cli` - the ``distilcal`` command.
"""

__version__ = "0.1.0"

from .alignment import (
    Alignment,
    RunLengthAlignment,
    TargetSet,
    UnitMap,
    build_framewise_targets,
    deduplicate,
    map_units,
    rearrange,
)
from .calibration import (
    BinStats,
    PredictionRecord,
    ReliabilityReport,
    bin_by_confidence,
    ece,
    reliability_csv,
)
from .errors import (
    ConfigurationError,
    DistilcalError,
    FileFormatError,
    InvalidInputError,
    InvalidParameterError,
    UnmappedTokenError,
)
from .losses import (
    LossResult,
    MultiTaskLogits,
    MultiTaskLossResult,
    batch_cross_entropy,
    cross_entropy,
    entropy,
    grad_check,
    kd_loss,
    lst_loss,
    multitask_loss,
)
from .probs import as_logits, as_probs, log_softmax_t, softmax_t, top_n
from .targets import (
    HardLabel,
    InterpolationConfig,
    SmoothingConfig,
    interpolate_target,
    one_hot,
    smooth_label,
    soft_label,
)
from .tempscale import (
    DEFAULT_BOUNDS,
    ScoredHypothesis,
    TemperatureFit,
    combine_scores,
    fit_temperature,
    nll_at_temperature,
)
from .toy import (
    EvalResult,
    SweepConfig,
    SweepRow,
    SyntheticTask,
    ToyNetwork,
    TrainConfig,
    evaluate,
    generate_data,
    make_student,
    make_task,
    make_teacher,
    network_loss_and_grad,
    sweep_csv,
    sweep_lambda,
    teacher_logits_on,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
