"""Multi-label classification over sparse binary label matrices.

Subpackages follow the usual split of multi-label methods:

* :mod:`labelspace.transform` - problem transformation (BR, CC, LP)
* :mod:`labelspace.adapt` - method adaptation (ML-kNN)
* :mod:`labelspace.ensemble` - label-space partitioning ensembles (RAkEL,
  community partitions)
"""
from .adapt import MlKnnModel, mlknn_fit, mlknn_predict
from .base import KnnSpec, LogisticSpec, base_fit, base_predict, base_predict_proba
from .data import (LabelLocation, LabelSpec, MultiLabelDataset, dataset_stats,
                   generate_synthetic, kfold_indices, load_arff, parse_arff, write_arff)
from .ensemble import (community_ensemble_fit, ensemble_fit, ensemble_predict,
                       random_disjoint_partition, random_overlapping_subsets)
from .graph import (CommunityAssignment, LabelGraph, build_cooccurrence_graph,
                    communities_to_partition, greedy_modularity, label_propagation, modularity)
from .metrics import MetricReport, confusion_counts, evaluate
from .partition import LabelPartition
from .sparse import (CsrBinaryMatrix, FeatureMatrix, csr_from_coords, density, row_support,
                     select_columns, select_rows)
from .transform import br_fit, br_predict, cc_fit, cc_predict, lp_fit, lp_predict

__version__ = "0.1.0"
