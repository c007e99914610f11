#include "sinbad/window_pyramid.hpp"

#include "sinbad/error.hpp"

#include <vector>

namespace sinbad {

void PyramidConfig::validate() const {
    if (window < 2 || window % 2 != 0) {
        throw ConfigError("window length must be even and >= 2, got " + std::to_string(window));
    }
    if (levels < 1) {
        throw ConfigError("pyramid levels must be >= 1, got " + std::to_string(levels));
    }
}

Eigen::MatrixXd pad_series(const TimeSeries& series, int window, int stride) {
    if (stride < 1) {
        throw ConfigError("stride must be >= 1");
    }
    if (window < 2 || window % 2 != 0) {
        throw ConfigError("window length must be even and >= 2");
    }
    const Eigen::Index pad = Eigen::Index(stride) * window / 2;
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(series.length() + 2 * pad, series.channels());
    padded.middleRows(pad, series.length()) = series.values;
    return padded;
}

ElementSet extract_pyramid_elements(const TimeSeries& series, const PyramidConfig& config) {
    config.validate();
    if (series.length() < 1 || series.channels() < 1) {
        throw DataError("series '" + series.series_id + "' is empty");
    }
    const Eigen::Index steps = series.length();
    const Eigen::Index channels = series.channels();
    const Eigen::Index window_dims = Eigen::Index(config.window) * channels;

    std::vector<Eigen::MatrixXd> padded;
    padded.reserve(std::size_t(config.levels));
    for (int stride = 1; stride <= config.levels; ++stride) {
        padded.push_back(pad_series(series, config.window, stride));
    }

    ElementSet set;
    set.sample_id = series.series_id;
    set.elements.resize(steps, config.element_dims(channels));
    for (Eigen::Index t = 0; t < steps; ++t) {
        for (int level = 0; level < config.levels; ++level) {
            const int stride = level + 1;
            const auto& source = padded[std::size_t(level)];
            const Eigen::Index base = level * window_dims;
            for (int i = 0; i < config.window; ++i) {
                const Eigen::Index row = t + Eigen::Index(i) * stride;
                for (Eigen::Index c = 0; c < channels; ++c) {
                    set.elements(t, base + i * channels + c) = static_cast<float>(source(row, c));
                }
            }
        }
    }
    return set;
}

}  // namespace sinbad
