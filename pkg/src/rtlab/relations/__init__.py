"""Closed-form relations and their brute-force checks."""

from rtlab.relations.classical import (ShortcutModel, check_gaussian_models, check_shortcut_model,
                                       random_shortcut_model, shortcut_closed_forms, shortcut_enumeration)
from rtlab.relations.linear import check_linear_loss_gap, check_two_perturbation_gap, robust_split_decomposition
from rtlab.relations.quantum import (adversarial_swap_condition, check_feature_swap_bound,
                                     check_measurement_noise_gap, check_pushforward_identity,
                                     generalized_trace_distance, helstrom_effect, incompatibility_check,
                                     noise_line_reports, noise_response_line)
from rtlab.relations.report import RelationReport
from rtlab.relations.tables import (JointLabelModel, biased_tradeoff_value, check_biased_tradeoff,
                                    check_unbiased_tradeoff, random_biased_model, random_unbiased_model,
                                    unbiased_tradeoff_predict)
from rtlab.relations.thresholds import (check_threshold_by_sampling, dataset_robustness_threshold,
                                        margin_radius, partial_robustness_threshold, robustness_threshold)

__all__ = [
    "JointLabelModel", "RelationReport", "ShortcutModel", "adversarial_swap_condition", "biased_tradeoff_value",
    "check_biased_tradeoff", "check_feature_swap_bound", "check_gaussian_models", "check_linear_loss_gap",
    "check_measurement_noise_gap", "check_pushforward_identity", "check_shortcut_model",
    "check_threshold_by_sampling", "check_two_perturbation_gap", "check_unbiased_tradeoff",
    "dataset_robustness_threshold", "generalized_trace_distance", "helstrom_effect", "incompatibility_check",
    "margin_radius", "noise_line_reports", "noise_response_line", "partial_robustness_threshold",
    "random_biased_model", "random_shortcut_model", "random_unbiased_model", "robust_split_decomposition",
    "robustness_threshold", "shortcut_closed_forms", "shortcut_enumeration", "unbiased_tradeoff_predict",
]
