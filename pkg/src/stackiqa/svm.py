"""Binary soft-margin SVM with RBF kernel, trained by SMO.

The solver is a simplified SMO: alternating full passes and non-bound passes,
with the second index of each working pair drawn from a seeded generator so
training is deterministic. The Gram matrix is kept dense up to GRAM_LIMIT
training points and recomputed row-by-row above that.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 200
GRAM_LIMIT = 4096

# Platt's endpoint tie threshold and the minimum alpha step worth taking.
_ENDPOINT_EPS = 1e-12
_MIN_STEP = 1e-14
# random partner draws before falling back to a full seeded sweep
_QUICK_TRIES = 4
# a full pass that improves the dual objective by less than this (relative)
# counts as a sweep without progress
_MIN_PASS_GAIN = 1e-9


@dataclass(frozen=True)
class TrainSet:
    xs: np.ndarray  # (n, d) float
    ys: np.ndarray  # (n,) labels in {+1, -1}


@dataclass(frozen=True)
class SvmModel:
    support_xs: np.ndarray  # (m, d)
    coeffs: np.ndarray  # (m,) alpha_i * y_i
    bias: float
    gamma: float
    c: float

    @property
    def dim(self) -> int:
        return self.support_xs.shape[1]


def scale_gamma(xs: np.ndarray) -> float:
    """1 / (d * var) heuristic; var is the mean per-dimension variance."""
    xs = np.asarray(xs, dtype=np.float64)
    d = xs.shape[1]
    var = float(np.mean(np.var(xs, axis=0)))
    if var <= 0.0:
        return 1.0 / d
    return 1.0 / (d * var)


def rbf_gram(xs: np.ndarray, gamma: float) -> np.ndarray:
    """Dense RBF Gram matrix K(x_i, x_j) = exp(-gamma * ||x_i - x_j||^2)."""
    sq = np.sum(xs * xs, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (xs @ xs.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def _rbf_row(xs: np.ndarray, x: np.ndarray, gamma: float) -> np.ndarray:
    diff = xs - x
    return np.exp(-gamma * np.sum(diff * diff, axis=1))


def _validate_train_set(ts: TrainSet) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(ts.xs, dtype=np.float64)
    ys = np.asarray(ts.ys, dtype=np.float64)
    if xs.ndim != 2:
        raise DataError(f"features must be a 2-D array, got shape {xs.shape}")
    n = xs.shape[0]
    if n < 2 or ys.shape != (n,):
        raise DataError(f"need matching xs ({xs.shape}) and ys ({ys.shape}), n >= 2")
    if not np.all(np.isfinite(xs)):
        raise DataError("non-finite feature values in training set")
    if not np.all(np.abs(ys) == 1.0):
        raise DataError("labels must be +1 or -1")
    if np.all(ys == ys[0]):
        raise DataError("training set contains a single class")
    return xs, ys


class _SmoState:
    def __init__(self, xs, ys, c, gamma, tol, rng):
        self.xs = xs
        self.ys = ys
        self.ysf = [float(v) for v in ys]  # plain floats for the hot path
        self.c = c
        self.gamma = gamma
        self.tol = tol
        self.rng = rng
        self.n = xs.shape[0]
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.gram = rbf_gram(xs, gamma) if self.n <= GRAM_LIMIT else None
        self.f = np.zeros(self.n)  # decision values over the training set

    def krow(self, i: int) -> np.ndarray:
        if self.gram is not None:
            return self.gram[i]
        return _rbf_row(self.xs, self.xs[i], self.gamma)

    def refresh_f(self) -> None:
        coeff = self.alpha * self.ys
        if self.gram is not None:
            self.f = self.gram @ coeff + self.b
        else:
            f = np.empty(self.n)
            for i in range(self.n):
                f[i] = float(self.krow(i) @ coeff)
            self.f = f + self.b

    def kkt_violated(self, i: int) -> bool:
        r = (self.f[i] - self.ys[i]) * self.ys[i]
        return (r < -self.tol and self.alpha[i] < self.c) or (
            r > self.tol and self.alpha[i] > 0.0
        )

    def objective(self) -> float:
        """Dual objective from the (fresh) decision cache: f - b = K (alpha*y)."""
        coeff = self.alpha * self.ys
        return float(self.alpha.sum()) - 0.5 * float(coeff @ (self.f - self.b))

    def mvp_finish(self) -> bool:
        """Step the maximal violating pair until the certified KKT gap closes.

        Random pairing crawls when many alphas sit just over tolerance; the
        extreme pair of the dual gradient closes that gap directly. Returns
        whether any step was taken.
        """
        progressed = False
        pos = self.ys > 0
        neg = ~pos
        for _ in range(10 * self.n):
            v = self.ys - (self.f - self.b)
            at_lo = self.alpha <= 0.0
            at_hi = self.alpha >= self.c
            up = np.nonzero((pos & ~at_hi) | (neg & ~at_lo))[0]
            low = np.nonzero((pos & ~at_lo) | (neg & ~at_hi))[0]
            if up.size == 0 or low.size == 0:
                break
            i = int(up[np.argmax(v[up])])
            j = int(low[np.argmin(v[low])])
            if v[i] - v[j] <= 2.0 * self.tol:
                break
            if not self.take_step(i, j):
                break
            progressed = True
        return progressed

    def recalibrate_b(self) -> None:
        """Re-center the bias inside the KKT interval implied by the alphas.

        Pair steps that end on the box boundary only estimate b; a misplaced
        bias then shows up as unfixable KKT violations. The dual gradient
        bounds give the feasible interval directly.
        """
        g = self.f - self.b
        v = self.ys - g
        pos, neg = self.ys > 0, self.ys < 0
        at_lo, at_hi = self.alpha <= 0.0, self.alpha >= self.c
        lower = v[(pos & ~at_hi) | (neg & ~at_lo)]
        upper = v[(pos & ~at_lo) | (neg & ~at_hi)]
        if lower.size and upper.size:
            b_new = 0.5 * (float(lower.max()) + float(upper.min()))
        elif lower.size:
            b_new = float(lower.max())
        elif upper.size:
            b_new = float(upper.min())
        else:
            return
        self.f += b_new - self.b
        self.b = b_new

    def take_step(self, i: int, j: int) -> bool:
        if i == j:
            return False
        ai = float(self.alpha[i])
        aj = float(self.alpha[j])
        yi = self.ysf[i]
        yj = self.ysf[j]
        s = yi * yj
        c = self.c
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        if lo >= hi:
            return False

        ei = float(self.f[i]) - yi
        ej = float(self.f[j]) - yj
        if self.gram is not None:
            kii = float(self.gram[i, i])
            kjj = float(self.gram[j, j])
            kij = float(self.gram[i, j])
        else:
            kii = kjj = 1.0  # exp(0) for the RBF kernel
            diff = self.xs[i] - self.xs[j]
            kij = float(np.exp(-self.gamma * (diff @ diff)))
        eta = kii + kjj - 2.0 * kij
        if eta > 0.0:
            aj_new = aj + yj * (ei - ej) / eta
            aj_new = min(max(aj_new, lo), hi)
        else:
            # flat direction: evaluate the (minimization) objective at both ends
            fi = yi * (ei + self.b) - ai * kii - s * aj * kij
            fj = yj * (ej + self.b) - s * ai * kij - aj * kjj
            lo1 = ai + s * (aj - lo)
            hi1 = ai + s * (aj - hi)
            psi_lo = (
                lo1 * fi + lo * fj
                + 0.5 * lo1 * lo1 * kii + 0.5 * lo * lo * kjj
                + s * lo * lo1 * kij
            )
            psi_hi = (
                hi1 * fi + hi * fj
                + 0.5 * hi1 * hi1 * kii + 0.5 * hi * hi * kjj
                + s * hi * hi1 * kij
            )
            if psi_lo < psi_hi - _ENDPOINT_EPS:
                aj_new = lo
            elif psi_lo > psi_hi + _ENDPOINT_EPS:
                aj_new = hi
            else:
                return False
        if abs(aj_new - aj) < _MIN_STEP * (aj_new + aj + _MIN_STEP):
            return False

        ai_new = min(max(ai + s * (aj - aj_new), 0.0), c)
        d_ai = ai_new - ai
        d_aj = aj_new - aj
        b_old = self.b
        b1 = b_old - ei - yi * d_ai * kii - yj * d_aj * kij
        b2 = b_old - ej - yi * d_ai * kij - yj * d_aj * kjj
        if 0.0 < ai_new < c:
            b_new = b1
        elif 0.0 < aj_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.alpha[i] = ai_new
        self.alpha[j] = aj_new
        self.f += (yi * d_ai) * self.krow(i) + (yj * d_aj) * self.krow(j)
        self.f += b_new - b_old
        self.b = b_new
        return True

    def violators(self, nonbound_only: bool = False) -> np.ndarray:
        r = (self.f - self.ys) * self.ys
        mask = ((r < -self.tol) & (self.alpha < self.c)) | (
            (r > self.tol) & (self.alpha > 0.0)
        )
        if nonbound_only:
            mask &= (self.alpha > 0.0) & (self.alpha < self.c)
        return np.nonzero(mask)[0]

    def try_partners(self, i: int) -> bool:
        """Optimize i against partners, cheapest candidates first: the
        largest-|E_i - E_j| non-bound point, seeded draws from the non-bound
        set, then the global |E| extreme, and only then a full seeded sweep."""
        errors = self.f - self.ys
        e_i = float(errors[i])
        nonbound = np.nonzero((self.alpha > 0.0) & (self.alpha < self.c))[0]
        if nonbound.size:
            j = int(nonbound[np.argmax(np.abs(e_i - errors[nonbound]))])
            if self.take_step(i, j):
                return True
            for k in self.rng.integers(nonbound.size, size=_QUICK_TRIES):
                if self.take_step(i, int(nonbound[k])):
                    return True
        j = int(np.argmax(np.abs(e_i - errors)))
        if self.take_step(i, j):
            return True
        for _ in range(_QUICK_TRIES):
            j = int(self.rng.integers(self.n))
            if j != i and self.take_step(i, j):
                return True
        for j in self.rng.permutation(self.n):
            if j != i and self.take_step(i, int(j)):
                return True
        return False


def smo_train(
    ts: TrainSet,
    c: float = DEFAULT_C,
    gamma: float | None = None,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
    seed: int = 0,
) -> SvmModel:
    """Train a soft-margin RBF SVM; deterministic for a fixed seed.

    Training stops when a full pass finds no KKT violation beyond tol.
    A sweep that neither updates an alpha nor materially improves the dual
    objective counts as idle; after max_passes idle sweeps (or an exact
    fixed point) training stops with a warning.
    """
    xs, ys = _validate_train_set(ts)
    if c <= 0.0 or tol <= 0.0:
        raise DataError("c and tol must be positive")
    if gamma is None:
        gamma = scale_gamma(xs)
    if gamma <= 0.0:
        raise DataError("gamma must be positive")

    rng = np.random.default_rng(seed)
    state = _SmoState(xs, ys, float(c), float(gamma), float(tol), rng)

    no_progress = 0
    idle_streak = 0
    examine_all = True
    converged = False
    prev_obj = -np.inf
    while no_progress < max_passes:
        state.refresh_f()
        candidates = state.violators(nonbound_only=not examine_all)
        if examine_all and candidates.size == 0:
            converged = True
            break
        changed = 0
        for i in candidates:
            i = int(i)
            # earlier steps in this pass may have fixed i already
            if state.kkt_violated(i) and state.try_partners(i):
                changed += 1
        obj = state.objective()
        stalled = changed == 0
        if examine_all:
            # a barely-moving full pass counts as a sweep without progress
            if obj - prev_obj <= _MIN_PASS_GAIN * max(1.0, abs(obj)):
                stalled = True
            prev_obj = obj
        if stalled:
            # random pairing is stuck: close the certified gap with maximal
            # violating pair steps, then re-center the bias
            b_before = state.b
            stepped = state.mvp_finish()
            state.recalibrate_b()
            no_progress += 1
            examine_all = True
            if changed == 0 and not stepped:
                idle_streak += 1
                # alphas frozen and only b jitters: give up quickly
                if state.b == b_before or idle_streak >= 5:
                    break
            else:
                idle_streak = 0
        else:
            no_progress = 0
            idle_streak = 0
            examine_all = not examine_all
    if not converged:
        state.refresh_f()
        if state.violators().size == 0:
            converged = True
    if not converged:
        log.warning(
            "SMO stopped with KKT violations beyond tol after %d idle sweeps",
            no_progress,
        )

    mask = state.alpha > 0.0
    return SvmModel(
        support_xs=np.array(xs[mask]),
        coeffs=np.array((state.alpha * ys)[mask]),
        bias=float(state.b),
        gamma=float(gamma),
        c=float(c),
    )


def _check_dim(model: SvmModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DataError(
            f"input dimension {x.shape} does not match model dimension "
            f"({model.dim},)"
        )
    return x


def decision(model: SvmModel, x: np.ndarray) -> float:
    """Signed decision value f(x) = sum_i coeffs_i K(x, sv_i) + b."""
    x = _check_dim(model, x)
    if model.support_xs.shape[0] == 0:
        return model.bias
    return float(_rbf_row(model.support_xs, x, model.gamma) @ model.coeffs + model.bias)


def decision_batch(model: SvmModel, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != model.dim:
        raise DataError(
            f"input shape {xs.shape} does not match model dimension {model.dim}"
        )
    if model.support_xs.shape[0] == 0:
        return np.full(xs.shape[0], model.bias)
    sq_x = np.sum(xs * xs, axis=1)[:, None]
    sq_s = np.sum(model.support_xs * model.support_xs, axis=1)[None, :]
    d2 = sq_x + sq_s - 2.0 * (xs @ model.support_xs.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-model.gamma * d2) @ model.coeffs + model.bias


def predict(model: SvmModel, x: np.ndarray) -> int:
    """Label in {+1, -1}; a decision of exactly zero breaks toward +1."""
    return 1 if decision(model, x) >= 0.0 else -1


def dual_objective(model: SvmModel) -> float:
    """Dual objective sum(alpha) - 0.5 * sum_ij alpha_i alpha_j y_i y_j K_ij."""
    alpha_sum = float(np.sum(np.abs(model.coeffs)))
    if model.support_xs.shape[0] == 0:
        return 0.0
    gram = rbf_gram(model.support_xs, model.gamma)
    return alpha_sum - 0.5 * float(model.coeffs @ gram @ model.coeffs)
