#include "hyperball/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "hyperball/errors.hpp"
#include "hyperball/rng.hpp"

namespace hyperball {

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4))
        throw DataError(path + ": truncated payload");
    return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

// A unit direction plus per-coordinate noise, all from the shared stream.
Vec random_unit(std::size_t dim, Xoshiro256pp& rng) {
    Vec v(dim);
    double n = 0.0;
    do {
        for (double& x : v) x = rng.normal();
        n = norm(v);
    } while (n < 1e-9);
    for (double& x : v) x /= n;
    return v;
}

}  // namespace

std::vector<SampleRef> Dataset::refs() const {
    std::vector<SampleRef> out;
    out.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        out.push_back(SampleRef{features[i], labels[i]});
    return out;
}

Dataset Dataset::head(std::size_t count) const {
    Dataset out = *this;
    if (count < out.features.size()) {
        out.features.resize(count);
        out.labels.resize(count);
    }
    return out;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError(images_path + ": cannot open");
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError(labels_path + ": cannot open");

    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != 0x00000803u)
        throw DataError(images_path + ": bad magic (expected 0x00000803)");
    const std::uint32_t n_images = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);
    if (rows != 28 || cols != 28)
        throw DataError(images_path + ": expected 28x28 images");

    const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != 0x00000801u)
        throw DataError(labels_path + ": bad magic (expected 0x00000801)");
    const std::uint32_t n_labels = read_be_u32(lab, labels_path);
    if (n_images != n_labels)
        throw DataError(images_path + ": image/label count mismatch (" + std::to_string(n_images) +
                        " vs " + std::to_string(n_labels) + ")");

    Dataset data;
    data.name = "mnist";
    data.num_classes = 10;
    data.clamp01 = true;
    data.features.reserve(n_images);
    data.labels.reserve(n_images);

    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
            throw DataError(images_path + ": truncated payload");
        Vec x(pixels);
        for (std::size_t p = 0; p < pixels; ++p) x[p] = static_cast<double>(buf[p]) / 255.0;
        data.features.push_back(std::move(x));
        unsigned char y;
        if (!lab.read(reinterpret_cast<char*>(&y), 1))
            throw DataError(labels_path + ": truncated payload");
        if (y > 9) throw DataError(labels_path + ": label out of range");
        data.labels.push_back(static_cast<int>(y));
    }
    return data;
}

Dataset make_gaussians(std::size_t classes, std::size_t dim, std::size_t per_class, double spread,
                       std::uint64_t seed) {
    if (classes < 2) throw ConfigError("make_gaussians: need at least 2 classes");
    Xoshiro256pp rng(seed);
    std::vector<Vec> centers;
    for (std::size_t k = 0; k < classes; ++k) centers.push_back(scaled(random_unit(dim, rng), 3.0));

    Dataset data;
    data.name = "gaussians";
    data.num_classes = classes;
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t i = 0; i < per_class; ++i) {
            Vec x = centers[k];
            for (double& v : x) v += spread * rng.normal();
            data.features.push_back(std::move(x));
            data.labels.push_back(static_cast<int>(k));
        }
    }
    return data;
}

Dataset make_hierarchical_gaussians(std::size_t groups, std::size_t leaves, std::size_t dim,
                                    std::size_t per_class, double spread, std::uint64_t seed) {
    if (groups < 1 || leaves < 1 || groups * leaves < 2)
        throw ConfigError("make_hierarchical_gaussians: need at least 2 leaf classes");
    Xoshiro256pp rng(seed);

    Dataset data;
    data.name = "hgaussians";
    data.num_classes = groups * leaves;
    int label = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const Vec super = scaled(random_unit(dim, rng), 3.0);
        for (std::size_t l = 0; l < leaves; ++l) {
            Vec center = super;
            const Vec offset = random_unit(dim, rng);
            add_scaled(center, offset, 1.0);
            for (std::size_t i = 0; i < per_class; ++i) {
                Vec x = center;
                for (double& v : x) v += spread * rng.normal();
                data.features.push_back(std::move(x));
                data.labels.push_back(label);
            }
            ++label;
        }
    }
    return data;
}

}  // namespace hyperball
