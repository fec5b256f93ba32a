"""
Per-instance sensitivity read off a Jacobian.

Columns answer "which input feature is the most influential per unit change",
rows answer "which output is the most affected by the same perturbation". The
row view is only meaningful when the outputs share a unit (e.g. class
probabilities); the caller says so through same_unit, which is recorded and
not enforced.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import DimensionError, NonFiniteError

logger = logging.getLogger(__name__)

AXES = ("feature", "output")


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    feature_scores: np.ndarray  # L2 norm of each Jacobian column
    output_scores: np.ndarray  # L2 norm of each Jacobian row
    feature_ranking: Tuple[int, ...]  # 1-based, descending score, ties by ascending index
    output_ranking: Tuple[int, ...]
    per_entry: np.ndarray
    same_unit: bool = False
    singular_hits: Tuple[Tuple[int, int], ...] = ()

    def scores(self, axis: str) -> np.ndarray:
        return self.feature_scores if axis == "feature" else self.output_scores

    def ranking(self, axis: str) -> Tuple[int, ...]:
        return self.feature_ranking if axis == "feature" else self.output_ranking


def _rank(scores: np.ndarray) -> Tuple[int, ...]:
    # lexsort sorts by the last key first
    order = np.lexsort((np.arange(len(scores)), -scores))
    return tuple(int(i) + 1 for i in order)


def build_report(jacobian, same_unit: bool = False,
                 singular_hits: Sequence[Tuple[int, int]] = ()) -> SensitivityReport:
    """Column and row norms of an n x m Jacobian with their rankings.

    Example:
        build_report([[1, 0], [0, 2]]).feature_ranking -> (2, 1)
    """
    J = np.asarray(jacobian, dtype=np.float64)
    if J.ndim != 2:
        raise DimensionError(f"a Jacobian must be a matrix, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        row, col = np.argwhere(~np.isfinite(J))[0]
        raise NonFiniteError(f"Jacobian entry ({row + 1}, {col + 1}) is not finite")
    feature_scores = np.linalg.norm(J, axis=0)
    output_scores = np.linalg.norm(J, axis=1)
    if not same_unit and J.shape[0] > 1:
        logger.debug("output ranking compares rows that were not declared to share a unit")
    return SensitivityReport(feature_scores=feature_scores,
                             output_scores=output_scores,
                             feature_ranking=_rank(feature_scores),
                             output_ranking=_rank(output_scores),
                             per_entry=J,
                             same_unit=bool(same_unit),
                             singular_hits=tuple((int(l), int(c)) for l, c in singular_hits))


def top_k(report: SensitivityReport, axis: str, k: int) -> List[Tuple[int, float]]:
    """First min(k, axis length) entries of the ranking on axis, with their scores."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got '{axis}'")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    scores = report.scores(axis)
    return [(index, float(scores[index - 1])) for index in report.ranking(axis)[:k]]


def report_to_dict(report: SensitivityReport, k: Optional[int] = None) -> dict:
    """JSON-ready report; k truncates both rankings."""
    return {"feature_scores": report.feature_scores.tolist(),
            "output_scores": report.output_scores.tolist(),
            "feature_ranking": list(report.feature_ranking[:k]),
            "output_ranking": list(report.output_ranking[:k]),
            "singular_hits": [list(hit) for hit in report.singular_hits],
            "same_unit": report.same_unit}


def report_to_frame(report: SensitivityReport, k: Optional[int] = None) -> pd.DataFrame:
    """Long table with one row per ranked index: axis, rank, index, score."""
    rows = []
    for axis in AXES:
        entries = top_k(report, axis, k or len(report.ranking(axis)))
        for rank, (index, score) in enumerate(entries, start=1):
            rows.append({"axis": axis, "rank": rank, "index": index, "score": score})
    return pd.DataFrame(rows, columns=["axis", "rank", "index", "score"])
