"""Binary classification from positive and unlabelled data.

Includes the negativity-weighted risk, three competing corrections, review
feature extraction, evaluation statistics and an exact-risk oracle.
"""

from .data import (ClassPriors, Dataset, FoldSplit, LabelState, ReviewRecord, apply_threshold,
                   downsample_balance, load_reviews, split_folds)
from .evaluation import (correlations, flip_report, mcnemar, prf1, score_histogram,
                         age_helpfulness_curve)
from .features import ReviewFeaturizer
from .losses import (Assembly, BaseLoss, RiskSpec, eval_loss, risk_cpu, risk_gradient,
                     risk_naive, risk_ncws, risk_pconf, risk_weighted_penalty)
from .model import (LinearModel, PULinearClassifier, TrainConfig, predict_labels,
                    predict_scores, train)
from .negativity import AgeNegativity, negativity_age, negativity_weight, positivity_default
from .synth import DiscreteDistribution, SynthConfig, exact_risk, generate, verify_identity

__version__ = "0.1.0"

__all__ = [
    "AgeNegativity", "Assembly", "DiscreteDistribution", "SynthConfig", "exact_risk", "generate",
    "verify_identity", "BaseLoss", "ClassPriors", "Dataset", "FoldSplit",
    "LabelState", "LinearModel", "PULinearClassifier", "ReviewFeaturizer", "ReviewRecord",
    "RiskSpec", "TrainConfig", "age_helpfulness_curve", "apply_threshold", "correlations",
    "downsample_balance", "eval_loss", "flip_report", "load_reviews", "mcnemar",
    "negativity_age", "negativity_weight", "positivity_default", "predict_labels",
    "predict_scores", "prf1", "risk_cpu", "risk_gradient", "risk_naive", "risk_ncws",
    "risk_pconf", "risk_weighted_penalty", "score_histogram", "split_folds", "train",
]
