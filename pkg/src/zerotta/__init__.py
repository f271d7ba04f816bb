"""Test-time adaptation by zero-temperature voting over confident views.

Predict on augmented views of one test image, keep the most confident
views by entropy percentile, collapse each kept prediction to its
zero-temperature (argmax) limit, and marginalize.  The package also ships
the supporting analytics: the binomial majority-vote error model,
calibration metrics, and a desk-scale verifier of the one-step
entropy-minimization invariance of the marginal prediction.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationReport,
    ErrorGapReport,
    ReliabilityBins,
    calibration_report,
    error_gap_report,
    expected_calibration_error,
    reliability_bins,
    spearman_rank_correlation,
)
from .core import (
    cosine_logits,
    ensemble_text_embeddings,
    entropy,
    marginal_distribution,
    softmax_temperature,
    zero_temperature_eps,
    zero_temperature_limit,
)
from .ensemble import (
    CondorcetProfile,
    EnsembleParams,
    LabelGroupReport,
    MonteCarloMajority,
    RiskBoundCheck,
    binomial_error_pmf,
    condorcet_profile,
    label_group_marginal_error,
    majority_error,
    monte_carlo_majority_error,
    risk_bound_check,
)
from .evaluate import (
    EvaluationReport,
    Method,
    ZeroShotResult,
    evaluate_dataset,
    zeroshot_predict,
)
from .manifest import DatasetManifest, ManifestError, SampleRecord, load_manifest, save_manifest
from .memlab import (
    InvarianceRecord,
    InvarianceSweep,
    MemConfig,
    ToyDims,
    ToyEncoder,
    confidence_mask,
    invariance_sweep,
    invariance_trial,
    mem_gradient,
    mem_loss,
    mem_step,
    prob_decrease,
    random_instance,
    toy_text_embeddings,
)
from .zero import (
    FilterConfig,
    FilterMask,
    TieBreak,
    ZeroConfig,
    ZeroResult,
    break_tie,
    confidence_filter,
    keep_count,
    vote_counts,
    zero_predict,
    zero_predict_from_logits,
)
from .zteb import ZtebFormatError, block_offset, read_block, read_embedding_file, write_embedding_file

__all__ = [name for name in dir() if not name.startswith("_")]
