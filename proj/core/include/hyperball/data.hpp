#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperball/train.hpp"
#include "hyperball/vecmath.hpp"

namespace hyperball {

struct Dataset {
    std::vector<Vec> features;
    std::vector<int> labels;
    std::size_t num_classes = 0;
    std::string name;
    std::string split;
    bool clamp01 = false;  // image data: attacks re-clamp inputs to [0,1]

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features[0].size(); }

    std::vector<SampleRef> refs() const;
    Dataset head(std::size_t count) const;
};

/// Parses the IDX pair: images with big-endian magic 0x00000803 and dims
/// [N, 28, 28] of u8 pixels scaled to [0, 1]; labels with magic 0x00000801.
/// Throws DataError with a distinct message for a bad magic, a truncated
/// payload, or an image/label count mismatch.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// K isotropic Gaussian clusters with centers on a sphere of radius 3.
Dataset make_gaussians(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                       std::uint64_t seed);

/// Two-level mixture: `groups` super-centers on the radius-3 sphere, `leaves`
/// sub-centers per group at offset 1, one class per leaf. Classes within a
/// group overlap when `spread` is large relative to the offset.
Dataset make_hierarchical_gaussians(std::size_t groups, std::size_t leaves, std::size_t dim,
                                    std::size_t per_class, double spread, std::uint64_t seed);

}  // namespace hyperball
