#pragma once

#include <span>

#include "hyperball/train.hpp"

namespace hyperball {

/// eps * sign(grad), componentwise; sign(0) = 0.
Vec sign_step(std::span<const double> grad, double eps);

/// x + eps * sign(d loss / d x); clamped to [0,1] for image data.
Vec fgsm(const TrainState& state, std::span<const double> x, int y, double eps, bool clamp01);

/// Iterated FGSM with per-step projection onto the l-infinity ball of radius
/// eps around the original input. With steps = 1 and step_size = eps this
/// reduces to fgsm().
Vec pgd(const TrainState& state, std::span<const double> x, int y, double eps, int steps,
        double step_size, bool clamp01);

}  // namespace hyperball
