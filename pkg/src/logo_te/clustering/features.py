import numpy as np

from ..errors import DimensionTooLarge


def pca_project(X, n_components):
    """Project rows of ``X`` onto its top principal components.

    Component signs are fixed so the largest-magnitude loading of each
    component is positive, which makes the projection deterministic.
    Components beyond the data rank come out as zero columns.
    """
    X = np.asarray(X, dtype=np.float64)
    n, dim = X.shape
    if n_components > dim:
        raise DimensionTooLarge(f"cannot reduce {dim}-d embeddings to {n_components} dimensions")
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    vt = vt[:n_components]
    signs = np.sign(vt[np.arange(vt.shape[0]), np.argmax(np.abs(vt), axis=1)])
    signs[signs == 0] = 1.0
    out = np.zeros((n, n_components))
    out[:, :vt.shape[0]] = centered @ (vt * signs[:, None]).T
    return out


def time_aware_features(embeddings, times, lam, reduced_dim=None):
    """Reduced semantic embedding with one appended column ``lam * day_index``."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if embeddings.shape[0] != times.shape[0]:
        raise ValueError(f"{embeddings.shape[0]} embeddings but {times.shape[0]} timestamps")
    if lam < 0:
        raise ValueError("temporal weight must be non-negative")
    reduced_dim = embeddings.shape[1] if reduced_dim is None else reduced_dim
    reduced = pca_project(embeddings, reduced_dim)
    return np.hstack([reduced, (lam * times)[:, None]])
