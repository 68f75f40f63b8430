"""Feature construction and the stacked SVM preference model.

Each base metric contributes two feature components per pair, its scores for
candidates A and B, so k metrics give a 2k-vector laid out as
[m1(A), m1(B), m2(A), m2(B), ...]. Features are z-scored with statistics from
the training set, and by default the training set is augmented with the
A/B-swapped copy of every sample (with flipped label) so the learned decision
function cannot pick up a position bias.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import svm
from .errors import DataError
from .metrics import MetricRegistry, builtin_registry
from .pairset import PairRecord, PreferenceLabel, ScoreCache

INF_CLAMP = 1e6

MODEL_MAGIC = "stackiqa-model v1"

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FeatureSpec:
    """Ordered list of metric ids; feature dimension is twice its length."""

    metric_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.metric_ids) < 1:
            raise DataError("feature spec needs at least one metric id")
        if len(set(self.metric_ids)) != len(self.metric_ids):
            raise DataError(f"duplicate metric ids in spec: {self.metric_ids}")

    @property
    def dim(self) -> int:
        return 2 * len(self.metric_ids)

    def validate(self, registry: MetricRegistry) -> None:
        for mid in self.metric_ids:
            registry.get(mid)


@dataclass(frozen=True)
class SvmParams:
    c: float = svm.DEFAULT_C
    gamma: float | None = None  # None -> 1/(d*var) heuristic
    tol: float = svm.DEFAULT_TOL
    max_passes: int = svm.DEFAULT_MAX_PASSES


@dataclass(frozen=True)
class StackModel:
    spec: FeatureSpec
    means: np.ndarray
    stds: np.ndarray
    zero_var: np.ndarray  # bool flags for dimensions with no training variance
    svm_model: svm.SvmModel
    params: SvmParams
    seed: int
    swap_augmented: bool = True
    format_version: int = FORMAT_VERSION


def _clamp_inf(x: np.ndarray) -> np.ndarray:
    return np.clip(x, -INF_CLAMP, INF_CLAMP)


def standardization_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-dimension mean/std; (numerically) constant dimensions get std 1."""
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    zero_var = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    return means, np.where(zero_var, 1.0, stds), zero_var


def build_features(
    pair: PairRecord, spec: FeatureSpec, cache: ScoreCache
) -> np.ndarray:
    """Raw 2k feature vector for one pair; infinities clamped to +-1e6."""
    out = np.empty(spec.dim, dtype=np.float64)
    for i, mid in enumerate(spec.metric_ids):
        for offset, side in ((0, "A"), (1, "B")):
            score = cache.get(pair.pair_id, side, mid)
            if score is None:
                raise DataError(
                    f"missing cached score for (pair {pair.pair_id}, side "
                    f"{side}, metric {mid}); run 'score' or 'ingest' first"
                )
            out[2 * i + offset] = score
    return _clamp_inf(out)


def build_feature_matrix(
    pairs: list[PairRecord], spec: FeatureSpec, cache: ScoreCache
) -> np.ndarray:
    return np.array([build_features(p, spec, cache) for p in pairs])


def swap_features(x: np.ndarray) -> np.ndarray:
    """Exchange the A and B components of every metric block (an involution)."""
    x = np.asarray(x)
    if x.shape[-1] % 2 != 0:
        raise DataError(f"feature vector length {x.shape[-1]} is odd")
    out = np.empty_like(x)
    out[..., 0::2] = x[..., 1::2]
    out[..., 1::2] = x[..., 0::2]
    return out


def _labels_to_signs(labels: list[PreferenceLabel]) -> np.ndarray:
    return np.array(
        [1.0 if lab is PreferenceLabel.PREFER_A else -1.0 for lab in labels]
    )


def train_stack(
    pairs: list[PairRecord],
    spec: FeatureSpec,
    cache: ScoreCache,
    params: SvmParams | None = None,
    seed: int = 42,
    swap_augment: bool = True,
    registry: MetricRegistry | None = None,
    labels: list[PreferenceLabel] | None = None,
) -> StackModel:
    """Train the stacked preference model on the non-Tie pairs.

    Labels default to each pair's own thresholded preference; Tie pairs are
    dropped. Standardization statistics come from the (augmented) training
    features only.
    """
    spec.validate(registry or builtin_registry())
    params = params or SvmParams()
    if labels is None:
        labels = [p.label for p in pairs]
    elif len(labels) != len(pairs):
        raise DataError("labels and pairs length mismatch")
    kept = [
        (p, lab)
        for p, lab in zip(pairs, labels)
        if lab is not PreferenceLabel.TIE
    ]
    if not kept:
        raise DataError("no non-Tie pairs to train on")
    used_pairs = [p for p, _ in kept]
    y = _labels_to_signs([lab for _, lab in kept])
    if np.all(y == y[0]):
        raise DataError("all training labels identical after Tie removal")
    x = build_feature_matrix(used_pairs, spec, cache)

    if swap_augment:
        x = np.vstack([x, swap_features(x)])
        y = np.concatenate([y, -y])

    means, stds, zero_var = standardization_stats(x)
    xs = (x - means) / stds

    model = svm.smo_train(
        svm.TrainSet(xs=xs, ys=y),
        c=params.c,
        gamma=params.gamma,
        tol=params.tol,
        max_passes=params.max_passes,
        seed=seed,
    )
    return StackModel(
        spec=spec,
        means=means,
        stds=stds,
        zero_var=zero_var,
        svm_model=model,
        params=params,
        seed=seed,
        swap_augmented=swap_augment,
    )


def standardize(model: StackModel, raw: np.ndarray) -> np.ndarray:
    return (_clamp_inf(np.asarray(raw, dtype=np.float64)) - model.means) / model.stds


def decision_value(
    model: StackModel, pair: PairRecord, cache: ScoreCache
) -> float:
    x = standardize(model, build_features(pair, model.spec, cache))
    return svm.decision(model.svm_model, x)


def predict_pair(
    model: StackModel, pair: PairRecord, cache: ScoreCache
) -> PreferenceLabel:
    """PreferA iff the decision value is >= 0; never returns Tie."""
    if decision_value(model, pair, cache) >= 0.0:
        return PreferenceLabel.PREFER_A
    return PreferenceLabel.PREFER_B


def save_stack_model(model: StackModel, path: str | os.PathLike) -> None:
    m = model.svm_model
    lines = [
        MODEL_MAGIC,
        "metrics " + " ".join(model.spec.metric_ids),
        f"c {repr(float(m.c))}",
        f"gamma {repr(float(m.gamma))}",
        f"tol {repr(float(model.params.tol))}",
        f"max_passes {model.params.max_passes}",
        f"seed {model.seed}",
        f"swap_augment {int(model.swap_augmented)}",
        "means " + " ".join(repr(float(v)) for v in model.means),
        "stds " + " ".join(repr(float(v)) for v in model.stds),
        "zero_var " + " ".join(str(int(v)) for v in model.zero_var),
        f"bias {repr(float(m.bias))}",
        f"support {m.support_xs.shape[0]}",
    ]
    for coeff, sv in zip(m.coeffs, m.support_xs):
        lines.append(" ".join([repr(float(coeff))] + [repr(float(v)) for v in sv]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _expect_key(line: str, key: str) -> list[str]:
    parts = line.split()
    if not parts or parts[0] != key:
        raise DataError(f"stack model: expected {key!r} line, got {line!r}")
    return parts[1:]


def load_stack_model(path: str | os.PathLike) -> StackModel:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read stack model {path}: {exc}")
    if not lines or lines[0] != MODEL_MAGIC:
        raise DataError(f"{path}: not a {MODEL_MAGIC!r} file")
    try:
        metric_ids = tuple(_expect_key(lines[1], "metrics"))
        c = float(_expect_key(lines[2], "c")[0])
        gamma = float(_expect_key(lines[3], "gamma")[0])
        tol = float(_expect_key(lines[4], "tol")[0])
        max_passes = int(_expect_key(lines[5], "max_passes")[0])
        seed = int(_expect_key(lines[6], "seed")[0])
        swap_augmented = bool(int(_expect_key(lines[7], "swap_augment")[0]))
        means = np.array([float(v) for v in _expect_key(lines[8], "means")])
        stds = np.array([float(v) for v in _expect_key(lines[9], "stds")])
        zero_var = np.array(
            [bool(int(v)) for v in _expect_key(lines[10], "zero_var")]
        )
        bias = float(_expect_key(lines[11], "bias")[0])
        n_support = int(_expect_key(lines[12], "support")[0])
        coeffs = np.empty(n_support)
        dim = 2 * len(metric_ids)
        support = np.empty((n_support, dim))
        for k in range(n_support):
            toks = lines[13 + k].split()
            if len(toks) != dim + 1:
                raise DataError(
                    f"{path}: support vector {k} has {len(toks) - 1} "
                    f"components, expected {dim}"
                )
            coeffs[k] = float(toks[0])
            support[k] = [float(t) for t in toks[1:]]
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed stack model: {exc}")
    spec = FeatureSpec(metric_ids=metric_ids)
    if means.shape != (spec.dim,) or stds.shape != (spec.dim,):
        raise DataError(f"{path}: standardization vectors do not match spec size")
    return StackModel(
        spec=spec,
        means=means,
        stds=stds,
        zero_var=zero_var,
        svm_model=svm.SvmModel(
            support_xs=support, coeffs=coeffs, bias=bias, gamma=gamma, c=c
        ),
        params=SvmParams(c=c, gamma=gamma, tol=tol, max_passes=max_passes),
        seed=seed,
        swap_augmented=swap_augmented,
    )
