"""Variational Gaussian conditionals and a contrastive MI upper bound.

The estimator pairs samples of two clusters row by row and evaluates

    (1 / N^2) * sum_M sum_J [ log f(e_i,M | e_j,M) - log f(e_j,J | e_i,M) ]

with two independently fitted linear-Gaussian conditionals, one per
direction.  ``disentangle`` descends this bound summed over cluster
pairs by translating centroids together with their sample clouds,
refitting the conditionals every step and rejecting any step that would
raise the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .codebook import Codebook
from .errors import DataError, InternalError

_RIDGE = 1e-6
_VAR_FLOOR = 1e-10
_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class VariationalModel:
    """Gaussian conditional f(target | source) with diagonal covariance.

    The mean is the affine map ``weight @ source + bias``.  The ridge
    penalty is applied to the augmented map including the bias, so the
    fitted family is deliberately not translation-equivariant: shifting
    the clouds apart is visible to the refitted objective, which is what
    lets gradient descent separate coincident centroids.
    """

    weight: np.ndarray
    bias: np.ndarray
    var: np.ndarray

    @classmethod
    def fit(
        cls,
        sources: np.ndarray,
        targets: np.ndarray,
        ridge: float = _RIDGE,
        var_floor: float = _VAR_FLOOR,
    ) -> "VariationalModel":
        S = np.asarray(sources, dtype=np.float64)
        T = np.asarray(targets, dtype=np.float64)
        if S.ndim != 2 or T.ndim != 2 or S.shape[0] != T.shape[0]:
            raise DataError("sources and targets must be 2-d with equal row counts")
        if S.shape[0] < 2:
            raise DataError("fitting a conditional needs at least 2 paired samples")
        A = np.hstack([S, np.ones((S.shape[0], 1))])
        gram = A.T @ A + ridge * np.eye(A.shape[1])
        coef = np.linalg.solve(gram, A.T @ T)
        resid = T - A @ coef
        var = np.maximum(np.mean(resid * resid, axis=0), var_floor)
        return cls(weight=coef[:-1].T.copy(), bias=coef[-1].copy(), var=var)

    def mean(self, sources: np.ndarray) -> np.ndarray:
        return np.asarray(sources, dtype=np.float64) @ self.weight.T + self.bias

    def log_density(self, targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
        """Row-paired log densities log f(target_m | source_m)."""
        r = np.asarray(targets, dtype=np.float64) - self.mean(sources)
        return -0.5 * np.sum(_LOG2PI + np.log(self.var) + r * r / self.var, axis=1)

    def cross_log_density(self, targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
        """Matrix [m, j] = log f(target_j | source_m) over all pairs."""
        mu = self.mean(sources)
        diff = np.asarray(targets, dtype=np.float64)[None, :, :] - mu[:, None, :]
        quad = np.sum(diff * diff / self.var, axis=2)
        norm = np.sum(_LOG2PI + np.log(self.var))
        return -0.5 * (norm + quad)


def _check_pair(samples_i: np.ndarray, samples_j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    si = np.asarray(samples_i, dtype=np.float64)
    sj = np.asarray(samples_j, dtype=np.float64)
    if si.ndim != 2 or sj.ndim != 2:
        raise DataError("samples must be 2-d arrays")
    if si.shape[0] != sj.shape[0]:
        raise DataError(
            f"sample counts differ: {si.shape[0]} vs {sj.shape[0]}; pairing needs equal N"
        )
    if si.shape[0] < 2:
        raise DataError("the estimator needs at least N = 2 paired samples")
    return si, sj


def vclub_estimate(
    samples_i: np.ndarray,
    samples_j: np.ndarray,
    forward: VariationalModel,
    backward: VariationalModel,
) -> float:
    """Contrastive log-ratio upper bound on MI between two sample sets.

    ``forward`` models f(e_i | e_j) and scores the row-paired diagonal;
    ``backward`` models f(e_j | e_i) and scores all cross pairs.
    """
    si, sj = _check_pair(samples_i, samples_j)
    for vm in (forward, backward):
        if np.any(vm.var <= 0.0):
            raise DataError("degenerate fitted conditional: non-positive variance")
    diagonal = float(np.mean(forward.log_density(si, sj)))
    cross = float(np.mean(backward.cross_log_density(targets=sj, sources=si)))
    return diagonal - cross


def fit_pair(
    samples_i: np.ndarray, samples_j: np.ndarray
) -> tuple[VariationalModel, VariationalModel]:
    """Fit both conditional directions for a cluster pair."""
    si, sj = _check_pair(samples_i, samples_j)
    return VariationalModel.fit(sj, si), VariationalModel.fit(si, sj)


def pair_value_and_grads(
    samples_i: np.ndarray,
    samples_j: np.ndarray,
    forward: VariationalModel,
    backward: VariationalModel,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Estimate plus its gradient w.r.t. rigid shifts of either cloud.

    The conditionals are held fixed; the gradient is with respect to a
    translation applied to every row of the respective sample set, which
    is exactly how centroid motion moves the clouds in ``disentangle``.
    """
    si, sj = _check_pair(samples_i, samples_j)
    value = vclub_estimate(si, sj, forward, backward)
    R = (si - forward.mean(sj)) / forward.var
    S = (sj.mean(axis=0) - backward.mean(si).mean(axis=0)) / backward.var
    grad_i = -R.mean(axis=0) - S @ backward.weight
    grad_j = R.mean(axis=0) @ forward.weight + S
    return value, grad_i, grad_j


def disentangle(
    cb: Codebook,
    cluster_samples: list[np.ndarray],
    steps: int = 100,
    lr: float = 0.01,
    seed: int = 0,
    max_samples: int = 256,
    return_history: bool = False,
) -> Codebook | tuple[Codebook, list[float]]:
    """Descend the pairwise MI bound by translating centroids.

    Samples of cluster k move rigidly with centroid k.  Each step refits
    every pairwise conditional, takes one gradient step on the summed
    bound, and halves the step length until the refitted objective does
    not increase; if no such length exists the descent stops.  The final
    objective therefore never exceeds the initial one.  Clusters with
    fewer than 2 samples are left untouched.  ``steps=0`` returns the
    codebook unchanged.
    """
    if cb.K < 2:
        raise DataError("disentangling needs at least 2 clusters")
    if len(cluster_samples) != cb.K:
        raise DataError(
            f"expected {cb.K} sample sets, got {len(cluster_samples)}"
        )
    rng = np.random.default_rng(seed)
    base: dict[int, np.ndarray] = {}
    for k in range(cb.K):
        s = np.asarray(cluster_samples[k], dtype=np.float64)
        if s.ndim != 2 or s.shape[0] < 2:
            continue
        if s.shape[0] > max_samples:
            pick = np.sort(rng.choice(s.shape[0], size=max_samples, replace=False))
            s = s[pick]
        base[k] = s - cb.centroids[k]
    active = sorted(base)
    out = replace(cb, centroids=cb.centroids.copy())
    if len(active) < 2 or steps == 0:
        return (out, []) if return_history else out

    def evaluate(C: np.ndarray) -> tuple[float, np.ndarray]:
        total = 0.0
        grads = np.zeros_like(C)
        for ai, i in enumerate(active):
            for j in active[ai + 1 :]:
                N = min(base[i].shape[0], base[j].shape[0])
                si = base[i][:N] + C[i]
                sj = base[j][:N] + C[j]
                fwd, bwd = fit_pair(si, sj)
                value, gi, gj = pair_value_and_grads(si, sj, fwd, bwd)
                total += value
                grads[i] += gi
                grads[j] += gj
        return total, grads

    cur = cb.centroids.astype(np.float64).copy()
    obj, grad = evaluate(cur)
    history = [obj]
    for _ in range(steps):
        if not np.all(np.isfinite(grad)):
            raise InternalError("non-finite disentanglement gradient")
        scale = lr
        accepted = False
        for _ in range(12):
            cand = cur - scale * grad
            obj_c, grad_c = evaluate(cand)
            if obj_c <= obj + 1e-12:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
        cur, obj, grad = cand, obj_c, grad_c
        history.append(obj)
    out = replace(cb, centroids=cur)
    return (out, history) if return_history else out
