from .analyze import analyze, dumps_stats
from .effect import EffectSize, Magnitude, cliffs_delta, magnitude
from .fixture import AccuracyFixture, load_accuracy_fixture
from .metrics import mean_iou, top_k_accuracy
from .tests import (StatTestResult, bonferroni, bonferroni_threshold, conover_posthoc, holm,
                    kruskal_wallis, wilcoxon_signed_rank)

__all__ = [
    "analyze", "dumps_stats", "EffectSize", "Magnitude", "cliffs_delta", "magnitude",
    "AccuracyFixture", "load_accuracy_fixture", "mean_iou", "top_k_accuracy", "StatTestResult",
    "bonferroni", "bonferroni_threshold", "conover_posthoc", "holm", "kruskal_wallis",
    "wilcoxon_signed_rank",
]
