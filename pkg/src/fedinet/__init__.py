"""Mastodon ego-network collection and Dunbar-circle analysis."""

__version__ = "0.1.0"

from .circles import EgoNetwork, build_circles, cohort_aggregate, scaling_ratios  # noqa: E402
from .client import Account, MastodonClient  # noqa: E402
from .config import Config, load_config  # noqa: E402
from .interactions import Interaction, Toot, classify_toot, extract_interactions  # noqa: E402
from .meanshift import ClusterResult, cluster_frequencies, estimate_bandwidth, meanshift_1d  # noqa: E402
from .ties import Dataset, TieRecord, annual_frequency, build_ties, filter_active_ties, split_active_network  # noqa: E402

__all__ = [
    "Account",
    "ClusterResult",
    "Config",
    "Dataset",
    "EgoNetwork",
    "Interaction",
    "MastodonClient",
    "TieRecord",
    "Toot",
    "annual_frequency",
    "build_circles",
    "build_ties",
    "classify_toot",
    "cluster_frequencies",
    "cohort_aggregate",
    "estimate_bandwidth",
    "extract_interactions",
    "filter_active_ties",
    "load_config",
    "meanshift_1d",
    "scaling_ratios",
    "split_active_network",
]
