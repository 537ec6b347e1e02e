"""One-dimensional clustering of detection durations and derived lengths."""
import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.mixture import GaussianMixture

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    means: np.ndarray
    method: str

    @property
    def n_clusters(self) -> int:
        return int(self.means.size)

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def _single(values: np.ndarray, method: str = 'single') -> ClusterResult:
    return ClusterResult(np.zeros(values.size, dtype=int), np.array([float(values.mean())]), method)


def _relabel(values: np.ndarray, labels: np.ndarray, merge_below: float) -> Tuple[np.ndarray, np.ndarray]:
    """Renumber clusters by increasing mean and merge near-identical ones."""
    groups = [np.flatnonzero(labels == k) for k in np.unique(labels)]
    groups.sort(key=lambda idx: values[idx].mean())
    merged: List[np.ndarray] = []
    for idx in groups:
        if merged and values[idx].mean() - values[merged[-1]].mean() < merge_below:
            merged[-1] = np.concatenate([merged[-1], idx])
        else:
            merged.append(idx)
    out = np.empty(values.size, dtype=int)
    means = []
    for k, idx in enumerate(merged):
        out[idx] = k
        means.append(float(values[idx].mean()))
    return out, np.array(means)


def gap_split(values: np.ndarray, quantum: float) -> np.ndarray:
    """Labels from cutting the sorted values at every gap above the threshold."""
    order = np.argsort(values, kind='stable')
    ordered = values[order]
    threshold = max(3.0 * quantum, 0.1 * float(np.median(ordered)))
    cuts = np.flatnonzero(np.diff(ordered) > threshold)
    sorted_labels = np.zeros(values.size, dtype=int)
    for c in cuts:
        sorted_labels[c + 1:] += 1
    labels = np.empty(values.size, dtype=int)
    labels[order] = sorted_labels
    return labels


def cluster_1d(
    values,
    quantum: float,
    max_components: int = 6,
    seed: Optional[int] = 0,
) -> ClusterResult:
    """Gaussian-mixture clustering with the component count chosen by BIC.

    ``quantum`` is the resolution of the data (sampling step); clusters whose
    means are closer than three quanta are merged. A fit that fails to
    converge falls back to splitting at large gaps.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return ClusterResult(np.zeros(0, dtype=int), np.zeros(0), 'empty')
    quantum = max(float(quantum), 1e-9)
    if values.size <= 1 or np.ptp(values) <= 3.0 * quantum:
        return _single(values)

    k_max = min(max_components, max(1, values.size // 3), np.unique(values).size)
    X = values.reshape(-1, 1)
    best_model, best_bic = None, np.inf
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', ConvergenceWarning)
            for k in range(1, k_max + 1):
                init = np.quantile(values, (np.arange(k) + 0.5) / k).reshape(-1, 1)
                gmm = GaussianMixture(
                    n_components=k,
                    covariance_type='full',
                    means_init=init,
                    reg_covar=quantum ** 2,
                    random_state=seed,
                )
                gmm.fit(X)
                bic = gmm.bic(X)
                logger.debug(f"GMM k={k}: BIC={bic:.2f}")
                if bic < best_bic:
                    best_model, best_bic = gmm, bic
    except (ConvergenceWarning, ValueError) as exc:
        logger.warning(f"Mixture fit ill-conditioned ({exc}); falling back to gap splitting")
        labels, means = _relabel(values, gap_split(values, quantum), 3.0 * quantum)
        return ClusterResult(labels, means, 'gap')

    labels, means = _relabel(values, best_model.predict(X), 3.0 * quantum)
    return ClusterResult(labels, means, 'gmm')
