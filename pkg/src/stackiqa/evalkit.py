"""Experimental protocol: baselines, cross-validation, subset search, supporters.

The cross-validation protocol is a seeded shuffle per cycle with the first
train_fraction of pairs used for training and the rest for testing; the median
of the cycle accuracies is the reported number. Tie pairs carry no preference
signal and are excluded from training and accuracy denominators by default.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import svm
from .errors import DataError
from .metrics import MetricRegistry, Polarity, builtin_registry
from .pairset import PairRecord, PreferenceLabel, ScoreCache
from .stacker import (
    FeatureSpec,
    SvmParams,
    build_feature_matrix,
    standardization_stats,
    swap_features,
)

log = logging.getLogger(__name__)

# Shuffle seed for cycle c, retry r is seed + c + r * RETRY_STRIDE; the large
# prime stride keeps retry streams disjoint from later cycles.
RETRY_STRIDE = 1_000_003
MAX_SPLIT_RETRIES = 10


class SplitUnit(Enum):
    BY_PAIR = "pair"
    BY_REFERENCE = "reference"


@dataclass(frozen=True)
class CvConfig:
    cycles: int = 5
    train_fraction: float = 0.8
    seed: int = 42
    split_unit: SplitUnit = SplitUnit.BY_PAIR

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise DataError(f"train_fraction {self.train_fraction} outside (0, 1)")
        if self.cycles < 1:
            raise DataError("cycles must be >= 1")


@dataclass(frozen=True)
class CycleResult:
    cycle: int
    accuracy: float
    n_train: int
    n_test: int


@dataclass(frozen=True)
class EvalReport:
    cycles: list[CycleResult]
    median_accuracy: float
    config: CvConfig
    metric_ids: tuple[str, ...]

    @property
    def per_cycle_accuracies(self) -> list[float]:
        return [c.accuracy for c in self.cycles]


@dataclass(frozen=True)
class SubsetResult:
    metric_ids: tuple[str, ...]
    median_accuracy: float

    @property
    def size(self) -> int:
        return len(self.metric_ids)


@dataclass(frozen=True)
class SupporterCell:
    accuracy: float
    count: int


@dataclass(frozen=True)
class SupporterMatrix:
    metric_ids: tuple[str, ...]
    cells: dict[tuple[str, str], SupporterCell] = field(default_factory=dict)


def median(values: list[float]) -> float:
    """Middle order statistic; mean of the middle two for even counts."""
    if not values:
        raise DataError("median of empty sequence")
    s = sorted(values)
    n = len(s)
    if n % 2 == 1:
        return s[n // 2]
    return 0.5 * (s[n // 2 - 1] + s[n // 2])


def non_tie_pairs(pairs: list[PairRecord]) -> list[PairRecord]:
    return [p for p in pairs if p.label is not PreferenceLabel.TIE]


def _metric_prediction(a: float, b: float, polarity: Polarity) -> PreferenceLabel:
    # an exact score tie predicts PreferA (the documented tie-break)
    if polarity is Polarity.LOWER_BETTER:
        prefer_a = a <= b
    else:
        prefer_a = a >= b
    return PreferenceLabel.PREFER_A if prefer_a else PreferenceLabel.PREFER_B


def metric_predictions(
    metric_id: str,
    pairs: list[PairRecord],
    cache: ScoreCache,
    registry: MetricRegistry | None = None,
) -> list[PreferenceLabel]:
    """Polarity-aware single-metric prediction for every pair given."""
    registry = registry or builtin_registry()
    desc = registry.get(metric_id)
    preds = []
    for p in pairs:
        a = cache.get(p.pair_id, "A", metric_id)
        b = cache.get(p.pair_id, "B", metric_id)
        if a is None or b is None:
            side = "A" if a is None else "B"
            raise DataError(
                f"missing cached score for (pair {p.pair_id}, side {side}, "
                f"metric {metric_id})"
            )
        preds.append(_metric_prediction(a, b, desc.polarity))
    return preds


def single_metric_accuracy(
    metric_id: str,
    pairs: list[PairRecord],
    cache: ScoreCache,
    registry: MetricRegistry | None = None,
    include_ties: bool = False,
) -> float:
    """Agreement rate of one metric with the human labels.

    Tie pairs are excluded by default; with include_ties they stay in the
    denominator and always count as wrong (a metric never predicts Tie).
    """
    used = pairs if include_ties else non_tie_pairs(pairs)
    if not used:
        raise DataError("no pairs to evaluate")
    preds = metric_predictions(metric_id, used, cache, registry)
    correct = sum(
        1 for p, pred in zip(used, preds) if p.label is pred
    )
    return correct / len(used)


def baseline_rows(
    metric_ids: list[str],
    pairs: list[PairRecord],
    cache: ScoreCache,
    registry: MetricRegistry | None = None,
    include_ties: bool = False,
) -> list[tuple[str, float, int]]:
    used = pairs if include_ties else non_tie_pairs(pairs)
    return [
        (
            mid,
            single_metric_accuracy(mid, pairs, cache, registry, include_ties),
            len(used),
        )
        for mid in metric_ids
    ]


def _shuffled_split(
    n: int, train_fraction: float, shuffle_seed: int, groups: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(shuffle_seed)
    n_train = math.floor(train_fraction * n)
    if groups is None:
        perm = rng.permutation(n)
        return perm[:n_train], perm[n_train:]
    # reference-level split: shuffle unique groups, then take whole groups
    # into the training side until it holds at least floor(f * n) pairs
    unique = []
    seen = set()
    for g in groups:
        if g not in seen:
            seen.add(g)
            unique.append(g)
    order = rng.permutation(len(unique))
    train_groups = set()
    count = 0
    for gi in order:
        if count >= n_train:
            break
        train_groups.add(unique[gi])
        count += int(np.sum(groups == unique[gi]))
    mask = np.array([g in train_groups for g in groups])
    return np.nonzero(mask)[0], np.nonzero(~mask)[0]


def _train_and_score(
    x_raw: np.ndarray,
    y: np.ndarray,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    params: SvmParams,
    svm_seed: int,
    swap_augment: bool,
) -> float:
    x_train = x_raw[train_idx]
    y_train = y[train_idx]
    if swap_augment:
        x_train = np.vstack([x_train, swap_features(x_train)])
        y_train = np.concatenate([y_train, -y_train])
    means, stds, _ = standardization_stats(x_train)
    model = svm.smo_train(
        svm.TrainSet(xs=(x_train - means) / stds, ys=y_train),
        c=params.c,
        gamma=params.gamma,
        tol=params.tol,
        max_passes=params.max_passes,
        seed=svm_seed,
    )
    scores = svm.decision_batch(model, (x_raw[test_idx] - means) / stds)
    pred = np.where(scores >= 0.0, 1.0, -1.0)
    return float(np.mean(pred == y[test_idx]))


def _cv_on_arrays(
    x_raw: np.ndarray,
    y: np.ndarray,
    cv: CvConfig,
    params: SvmParams,
    groups: np.ndarray | None = None,
    swap_augment: bool = True,
) -> list[CycleResult]:
    n = x_raw.shape[0]
    results = []
    for cycle in range(cv.cycles):
        for retry in range(MAX_SPLIT_RETRIES + 1):
            shuffle_seed = cv.seed + cycle + retry * RETRY_STRIDE
            train_idx, test_idx = _shuffled_split(
                n, cv.train_fraction, shuffle_seed, groups
            )
            train_ok = len(np.unique(y[train_idx])) == 2
            test_ok = len(test_idx) > 0 and len(np.unique(y[test_idx])) == 2
            if train_ok and test_ok:
                break
            log.info(
                "cycle %d: degenerate split (retry %d, seed %d)",
                cycle,
                retry + 1,
                shuffle_seed,
            )
        else:
            raise DataError(
                f"cycle {cycle}: no usable split after "
                f"{MAX_SPLIT_RETRIES} retries (labels too imbalanced)"
            )
        acc = _train_and_score(
            x_raw, y, train_idx, test_idx, params, cv.seed + cycle, swap_augment
        )
        results.append(
            CycleResult(
                cycle=cycle,
                accuracy=acc,
                n_train=len(train_idx),
                n_test=len(test_idx),
            )
        )
    return results


def cross_validate(
    pairs: list[PairRecord],
    spec: FeatureSpec,
    cache: ScoreCache,
    cv: CvConfig | None = None,
    params: SvmParams | None = None,
    registry: MetricRegistry | None = None,
    swap_augment: bool = True,
) -> EvalReport:
    """Seeded shuffle-split cycles; reports every accuracy and their median."""
    cv = cv or CvConfig()
    params = params or SvmParams()
    spec.validate(registry or builtin_registry())
    usable = non_tie_pairs(pairs)
    if len(usable) < 10:
        raise DataError(f"need at least 10 non-Tie pairs, got {len(usable)}")
    x_raw = build_feature_matrix(usable, spec, cache)
    y = np.array(
        [1.0 if p.label is PreferenceLabel.PREFER_A else -1.0 for p in usable]
    )
    groups = None
    if cv.split_unit is SplitUnit.BY_REFERENCE:
        groups = np.array([str(p.ref_path) for p in usable])
    cycles = _cv_on_arrays(x_raw, y, cv, params, groups, swap_augment)
    return EvalReport(
        cycles=cycles,
        median_accuracy=median([c.accuracy for c in cycles]),
        config=cv,
        metric_ids=spec.metric_ids,
    )


def enumerate_subsets(
    pool: list[str], sizes: list[int]
) -> list[tuple[str, ...]]:
    """All subsets of each requested size, lexicographic by pool index."""
    if not pool:
        raise DataError("metric pool is empty")
    if len(set(pool)) != len(pool):
        raise DataError("duplicate metric ids in pool")
    out: list[tuple[str, ...]] = []
    for size in sorted(set(sizes)):
        if size < 1 or size > len(pool):
            raise DataError(
                f"subset size {size} out of range 1..{len(pool)}"
            )
        out.extend(itertools.combinations(pool, size))
    return out


_WORKER: dict = {}


def _subset_worker_init(x_full, y, groups, cv, params, swap_augment):
    _WORKER["args"] = (x_full, y, groups, cv, params, swap_augment)


def _subset_worker_run(cols: tuple[int, ...]) -> float:
    x_full, y, groups, cv, params, swap_augment = _WORKER["args"]
    cycles = _cv_on_arrays(
        x_full[:, list(cols)], y, cv, params, groups, swap_augment
    )
    return median([c.accuracy for c in cycles])


def subset_search(
    pool: list[str],
    sizes: list[int],
    pairs: list[PairRecord],
    cache: ScoreCache,
    cv: CvConfig | None = None,
    params: SvmParams | None = None,
    registry: MetricRegistry | None = None,
    swap_augment: bool = True,
    jobs: int = 1,
) -> list[SubsetResult]:
    """Cross-validate every subset of the pool at the requested sizes.

    All subsets reuse the same per-cycle shuffle seeds, so their medians are
    directly comparable. Results follow the deterministic enumeration order
    regardless of the worker count.
    """
    cv = cv or CvConfig()
    params = params or SvmParams()
    registry = registry or builtin_registry()
    for mid in pool:
        registry.get(mid)
    subsets = enumerate_subsets(pool, sizes)

    usable = non_tie_pairs(pairs)
    if len(usable) < 10:
        raise DataError(f"need at least 10 non-Tie pairs, got {len(usable)}")
    full_spec = FeatureSpec(metric_ids=tuple(pool))
    x_full = build_feature_matrix(usable, full_spec, cache)
    y = np.array(
        [1.0 if p.label is PreferenceLabel.PREFER_A else -1.0 for p in usable]
    )
    groups = None
    if cv.split_unit is SplitUnit.BY_REFERENCE:
        groups = np.array([str(p.ref_path) for p in usable])

    col_index = {mid: i for i, mid in enumerate(pool)}
    tasks = [
        tuple(c for mid in subset for c in (2 * col_index[mid], 2 * col_index[mid] + 1))
        for subset in subsets
    ]

    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_subset_worker_init,
            initargs=(x_full, y, groups, cv, params, swap_augment),
        ) as pool_exec:
            medians = list(pool_exec.map(_subset_worker_run, tasks, chunksize=4))
    else:
        _subset_worker_init(x_full, y, groups, cv, params, swap_augment)
        medians = [_subset_worker_run(t) for t in tasks]

    return [
        SubsetResult(metric_ids=subset, median_accuracy=acc)
        for subset, acc in zip(subsets, medians)
    ]


def per_size_best(results: list[SubsetResult]) -> dict[int, SubsetResult]:
    """Best median per subset size (first in enumeration order wins ties)."""
    best: dict[int, SubsetResult] = {}
    for r in results:
        cur = best.get(r.size)
        if cur is None or r.median_accuracy > cur.median_accuracy:
            best[r.size] = r
    return dict(sorted(best.items()))


def supporter_matrix(
    metric_ids: list[str],
    pairs: list[PairRecord],
    cache: ScoreCache,
    registry: MetricRegistry | None = None,
) -> SupporterMatrix:
    """Accuracy of each metric restricted to the pairs another one got wrong.

    Cell (supported s, supporter t) holds t's accuracy over the non-Tie pairs
    where s disagreed with the human label, plus the size of that support set.
    Cells are absent when s made no errors; the diagonal is omitted.
    """
    usable = non_tie_pairs(pairs)
    if not usable:
        raise DataError("no non-Tie pairs to evaluate")
    preds = {
        mid: metric_predictions(mid, usable, cache, registry)
        for mid in metric_ids
    }
    labels = [p.label for p in usable]
    cells: dict[tuple[str, str], SupporterCell] = {}
    for s in metric_ids:
        wrong = [i for i, lab in enumerate(labels) if preds[s][i] is not lab]
        if not wrong:
            continue
        for t in metric_ids:
            if t == s:
                continue
            correct = sum(1 for i in wrong if preds[t][i] is labels[i])
            cells[(s, t)] = SupporterCell(
                accuracy=correct / len(wrong), count=len(wrong)
            )
    return SupporterMatrix(metric_ids=tuple(metric_ids), cells=cells)
