#include "hyperball/attacks.hpp"

#include <algorithm>
#include <stdexcept>

namespace hyperball {

namespace {

void clamp_unit_interval(Vec& x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

Vec sign_step(std::span<const double> grad, double eps) {
    Vec out(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
        out[i] = grad[i] > 0.0 ? eps : (grad[i] < 0.0 ? -eps : 0.0);
    return out;
}

Vec fgsm(const TrainState& state, std::span<const double> x, int y, double eps, bool clamp01) {
    if (eps < 0.0) throw std::invalid_argument("fgsm: eps must be >= 0");
    const Vec grad = input_gradient(state, x, y);
    Vec adv(x.begin(), x.end());
    const Vec delta = sign_step(grad, eps);
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += delta[i];
    if (clamp01) clamp_unit_interval(adv);
    return adv;
}

Vec pgd(const TrainState& state, std::span<const double> x, int y, double eps, int steps,
        double step_size, bool clamp01) {
    if (steps < 1) throw std::invalid_argument("pgd: steps must be >= 1");
    Vec adv(x.begin(), x.end());
    for (int t = 0; t < steps; ++t) {
        const Vec grad = input_gradient(state, adv, y);
        const Vec delta = sign_step(grad, step_size);
        for (std::size_t i = 0; i < adv.size(); ++i) {
            double v = adv[i] + delta[i];
            v = std::clamp(v, x[i] - eps, x[i] + eps);
            adv[i] = v;
        }
        if (clamp01) clamp_unit_interval(adv);
    }
    return adv;
}

}  // namespace hyperball
