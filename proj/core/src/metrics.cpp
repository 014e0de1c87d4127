#include "hyperball/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hyperball/errors.hpp"

namespace hyperball {

OodScoreKind ood_score_kind_from_string(const std::string& name) {
    if (name == "softmax") return OodScoreKind::softmax;
    if (name == "energy") return OodScoreKind::energy;
    throw ConfigError("unknown OOD score kind '" + name + "' (expected softmax|energy)");
}

std::string to_string(OodScoreKind kind) {
    return kind == OodScoreKind::softmax ? "softmax" : "energy";
}

double ood_score(std::span<const double> logits, OodScoreKind kind, double temperature) {
    if (logits.empty()) throw std::invalid_argument("ood_score: empty logits");
    const double mx = *std::max_element(logits.begin(), logits.end());
    if (kind == OodScoreKind::softmax) {
        double sum = 0.0;
        for (double v : logits) sum += std::exp(v - mx);
        return 1.0 / sum;  // exp(mx - lse) = max softmax probability
    }
    if (!(temperature > 0.0)) throw ConfigError("ood_score: temperature must be > 0");
    double sum = 0.0;
    for (double v : logits) sum += std::exp((v - mx) / temperature);
    const double lse = mx / temperature + std::log(sum);
    return -temperature * lse;
}

OodMetrics metric_suite(std::span<const double> in_scores, std::span<const double> out_scores) {
    if (in_scores.empty() || out_scores.empty())
        throw std::invalid_argument("metric_suite: both score sets must be non-empty");

    // One (score, is_in) stream, descending; equal scores collapse into a
    // single threshold when the cumulative counts are read off.
    std::vector<std::pair<double, int>> all;
    all.reserve(in_scores.size() + out_scores.size());
    for (double s : in_scores) all.emplace_back(s, 1);
    for (double s : out_scores) all.emplace_back(s, 0);
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const double n_in = static_cast<double>(in_scores.size());
    const double n_out = static_cast<double>(out_scores.size());

    struct Point {
        double tpr, fpr, precision;
    };
    std::vector<Point> pts;
    pts.reserve(all.size() + 1);

    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i].second ? ++tp : ++fp;
        const bool last_of_threshold = (i + 1 == all.size()) || (all[i + 1].first != all[i].first);
        if (last_of_threshold) {
            Point p;
            p.tpr = static_cast<double>(tp) / n_in;
            p.fpr = static_cast<double>(fp) / n_out;
            p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            pts.push_back(p);
        }
    }

    OodMetrics m;

    // FPR at the largest threshold whose TPR reaches 0.95.
    for (const Point& p : pts) {
        if (p.tpr >= 0.95) {
            m.fpr95 = p.fpr;
            break;
        }
    }

    double prev_tpr = 0.0, prev_fpr = 0.0;
    for (const Point& p : pts) {
        m.auroc += (p.fpr - prev_fpr) * (p.tpr + prev_tpr) / 2.0;
        prev_tpr = p.tpr;
        prev_fpr = p.fpr;
    }

    // PR curve starts at (recall 0, precision 1) by convention.
    double prev_recall = 0.0, prev_precision = 1.0;
    for (const Point& p : pts) {
        m.aupr += (p.tpr - prev_recall) * (p.precision + prev_precision) / 2.0;
        prev_recall = p.tpr;
        prev_precision = p.precision;
    }
    return m;
}

}  // namespace hyperball
