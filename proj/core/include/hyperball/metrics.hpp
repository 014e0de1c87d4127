#pragma once

#include <span>
#include <string>
#include <vector>

#include "hyperball/vecmath.hpp"

namespace hyperball {

enum class OodScoreKind { softmax, energy };

OodScoreKind ood_score_kind_from_string(const std::string& name);
std::string to_string(OodScoreKind kind);

/// softmax: max_k softmax(logits)_k. energy: -T * ln sum_k exp(logit_k / T)
/// (lower for confident in-distribution inputs; negate before ranking).
double ood_score(std::span<const double> logits, OodScoreKind kind, double temperature);

struct OodMetrics {
    double fpr95 = 0.0;
    double auroc = 0.0;
    double aupr = 0.0;
};

/// Detection metrics with the convention that larger scores mean
/// in-distribution (the positive class). FPR95 is the false-positive rate at
/// the smallest threshold still reaching 95% true-positive rate; AUROC and
/// AUPR are trapezoids over the sorted unique score thresholds, equal scores
/// collapsing into one threshold.
OodMetrics metric_suite(std::span<const double> in_scores, std::span<const double> out_scores);

}  // namespace hyperball
