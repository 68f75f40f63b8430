"""Pairwise compressed-image quality assessment by metric stacking.

Base metrics (native PSNR/SSIM/NIQE plus externally scored deep metrics) are
combined into a per-pair feature vector and fed to an RBF-kernel SVM that
predicts which of two candidate images humans prefer against a reference.
"""

from .errors import DataError, NumericError, StackIqaError
from .evalkit import (
    CvConfig,
    EvalReport,
    SplitUnit,
    SubsetResult,
    SupporterMatrix,
    cross_validate,
    single_metric_accuracy,
    subset_search,
    supporter_matrix,
)
from .metrics import (
    MetricDescriptor,
    MetricKind,
    MetricRegistry,
    NiqePristineModel,
    Polarity,
    Provenance,
    builtin_registry,
    fit_aggd,
    fit_pristine_model,
    niqe,
    psnr,
    ssim,
)
from .pairset import (
    Image,
    PairRecord,
    PreferenceLabel,
    ScoreCache,
    image_from_array,
    load_image,
    load_manifest,
    save_manifest,
)
from .stacker import (
    FeatureSpec,
    StackModel,
    SvmParams,
    build_features,
    load_stack_model,
    predict_pair,
    save_stack_model,
    swap_features,
    train_stack,
)
from .svm import SvmModel, TrainSet, decision, predict, smo_train

__version__ = "0.1.0"
