"""Attribute-driven density-based community detection."""

from .density import DensityVector, GmmModel, componentwise_density, fit_gmm, knn_density, mixture_density
from .detect import ClusterTree, Partition, Role, assign_noncore, build_cluster_tree, extract_clusters, run_attdecode
from .graph import (
    AttributedNetwork,
    InducedSubgraph,
    NodeSubset,
    build_network,
    connected_components,
    degree_density,
    load_network,
    local_density,
    upper_level_set,
)
from .metrics import ari, nmi
from .simgen import SynthConfig, SynthInstance, generate_instance

__version__ = "0.1.0"

__all__ = [
    "AttributedNetwork", "InducedSubgraph", "NodeSubset", "build_network", "load_network",
    "upper_level_set", "connected_components", "degree_density", "local_density",
    "DensityVector", "GmmModel", "knn_density", "fit_gmm", "mixture_density", "componentwise_density",
    "Role", "ClusterTree", "Partition", "build_cluster_tree", "extract_clusters", "assign_noncore",
    "run_attdecode", "nmi", "ari", "SynthConfig", "SynthInstance", "generate_instance",
]
