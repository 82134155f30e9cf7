"""Complex-event identification: time-aware document clustering and dataset assembly."""

from .assembly import (ClusterConfig, SplitResult, SplitThresholds, assign_clusters, build_dataset,
                       filter_and_split, split_supercluster, weighted_centroid)
from .density import NOISE, cluster_documents, hdbscan
from .features import pca_project, time_aware_features

__all__ = [
    "NOISE", "ClusterConfig", "SplitResult", "SplitThresholds", "assign_clusters", "build_dataset",
    "cluster_documents", "filter_and_split", "hdbscan", "pca_project", "split_supercluster",
    "time_aware_features", "weighted_centroid",
]
