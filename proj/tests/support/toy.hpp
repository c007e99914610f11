#pragma once

// Two-component toy sets: every element is +-u plus noise, half of each sign.
// Normal sets use u = (1, 1), anomalous sets u = (1, -1). Both kinds share the
// same mean (zero) and the same per-axis marginals; only the joint structure
// differs. Extra dimensions carry pure noise.

#include "sinbad/detector.hpp"

#include <random>
#include <string>
#include <vector>

namespace sinbad::toy {

struct ToyParams {
    Eigen::Index elements = 40;
    Eigen::Index dims = 4;
    float noise = 0.3f;
};

inline ElementMatrix toy_set(bool anomalous, std::mt19937_64& rng, const ToyParams& p = {}) {
    std::normal_distribution<float> normal(0.0f, p.noise);
    ElementMatrix m(p.elements, p.dims);
    for (Eigen::Index i = 0; i < p.elements; ++i) {
        const float sign = (i % 2 == 0) ? 1.0f : -1.0f;
        for (Eigen::Index d = 0; d < p.dims; ++d) m(i, d) = normal(rng);
        m(i, 0) += sign;
        m(i, 1) += anomalous ? -sign : sign;
    }
    return m;
}

inline std::vector<Sample> toy_samples(int n_normal, int n_anomalous, std::uint64_t seed,
                                       const ToyParams& p = {}) {
    std::mt19937_64 rng(seed);
    std::vector<Sample> out;
    const auto key = GroupKey::from_keys({{"level", "ts"}});
    for (int i = 0; i < n_normal + n_anomalous; ++i) {
        Sample s;
        const bool anomalous = i >= n_normal;
        s.id = "toy" + std::to_string(seed) + "_" + std::to_string(i);
        s.label = anomalous ? Label::anomalous : Label::normal;
        s.label_name = anomalous ? "anomalous" : "normal";
        s.sets[key] = toy_set(anomalous, rng, p);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace sinbad::toy
