"""Windowed continuous queries over per-frame video detection traces.

Detection traces (object id, label, bounding box, feature vector per frame)
are modeled as relations with vector-valued columns, grouped into arrables
(one row per object, parallel ordered vectors), and queried with windowed
operators: similarity search and joins over feature vectors, consecutive-
appearance compression, counting, and net direction of motion.
"""

from .errors import VaqueryError
from .model import (Arrable, ArrableRow, BoundingBox, Column, ColumnKind,
                    FeatureVector, Relation, Schema, TRACE_SCHEMA, VTuple,
                    kind_check, validate_tuple)
from .operators import (BBPattern, CctOption, ComparisonCounter, Direction8,
                        JoinPair, cct, cct_join, cjoin, direction,
                        group_count, hash_equi_join, nl_join, project, r2a,
                        select)
from .similarity import (MatchCondition, MatchPolarity, Metric,
                         cosine_similarity, euclidean_distance_unit, smatch)
from .windows import WindowKind, WindowManager, WindowSpec

__version__ = "0.1.0"

__all__ = [
    "VaqueryError", "BoundingBox", "FeatureVector", "VTuple", "ColumnKind",
    "Column", "Schema", "TRACE_SCHEMA", "Relation", "Arrable", "ArrableRow",
    "kind_check", "validate_tuple",
    "Metric", "MatchPolarity", "MatchCondition", "cosine_similarity",
    "euclidean_distance_unit", "smatch",
    "CctOption", "Direction8", "BBPattern", "JoinPair", "ComparisonCounter",
    "r2a", "cct", "select", "project", "nl_join", "cjoin", "cct_join",
    "hash_equi_join", "direction", "group_count",
    "WindowKind", "WindowSpec", "WindowManager",
    "__version__",
]
