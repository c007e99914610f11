#include "sinbad/histogram.hpp"

#include "sinbad/error.hpp"
#include "sinbad/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sinbad {

const char* to_string(EdgeMode mode) {
    switch (mode) {
        case EdgeMode::equal_width: return "width";
        case EdgeMode::quantile: return "quantile";
    }
    return "?";
}

EdgeMode parse_edge_mode(std::string_view text) {
    if (text == "width" || text == "equal_width") return EdgeMode::equal_width;
    if (text == "quantile") return EdgeMode::quantile;
    throw ConfigError("unknown edge mode '" + std::string(text) + "'");
}

std::uint64_t HistogramSpec::identity() const {
    std::string bytes;
    auto append = [&bytes](const auto& value) {
        bytes.append(reinterpret_cast<const char*>(&value), sizeof(value));
    };
    append(bins);
    append(cumulative);
    append(edge_mode);
    for (std::size_t j = 0; j < edges.size(); ++j) {
        append(degenerate[j]);
        for (double e : edges[j]) append(e);
    }
    return fnv1a64(bytes);
}

namespace {

void check_bins(Eigen::Index bins) {
    if (bins < 2) {
        throw ConfigError("histogram needs at least 2 bins, got " + std::to_string(bins));
    }
}

std::vector<double> width_edges(double lo, double hi, Eigen::Index bins) {
    std::vector<double> edges(std::size_t(bins) + 1);
    const double width = (hi - lo) / double(bins);
    for (Eigen::Index k = 0; k <= bins; ++k) {
        edges[std::size_t(k)] = lo + width * double(k);
    }
    edges.back() = hi;
    return edges;
}

// Linear interpolation between order statistics at position q * (n - 1).
std::vector<double> quantile_edges(std::vector<double> values, Eigen::Index bins) {
    std::sort(values.begin(), values.end());
    const double last = double(values.size() - 1);
    std::vector<double> edges(std::size_t(bins) + 1);
    for (Eigen::Index k = 0; k <= bins; ++k) {
        const double pos = last * double(k) / double(bins);
        const auto below = static_cast<std::size_t>(std::floor(pos));
        const auto above = std::min(below + 1, values.size() - 1);
        const double frac = pos - double(below);
        edges[std::size_t(k)] = values[below] + frac * (values[above] - values[below]);
    }
    edges.front() = values.front();
    edges.back() = values.back();
    return edges;
}

}  // namespace

HistogramSpec fit_bin_edges(const Eigen::MatrixXd& pooled, Eigen::Index bins, EdgeMode mode,
                            bool cumulative) {
    check_bins(bins);
    if (pooled.rows() < 1 || pooled.cols() < 1) {
        throw DataError("cannot fit bin edges on an empty pool");
    }
    HistogramSpec spec;
    spec.bins = bins;
    spec.cumulative = cumulative;
    spec.edge_mode = mode;
    spec.edges.reserve(std::size_t(pooled.cols()));
    spec.degenerate.reserve(std::size_t(pooled.cols()));
    for (Eigen::Index j = 0; j < pooled.cols(); ++j) {
        const auto column = pooled.col(j);
        const double lo = column.minCoeff();
        const double hi = column.maxCoeff();
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            throw DataError("non-finite projected value while fitting bin edges");
        }
        if (lo == hi) {
            spec.edges.emplace_back(std::size_t(bins) + 1, lo);
            spec.degenerate.push_back(1);
            continue;
        }
        spec.degenerate.push_back(0);
        if (mode == EdgeMode::equal_width) {
            spec.edges.push_back(width_edges(lo, hi, bins));
        } else {
            spec.edges.push_back(
                quantile_edges(std::vector<double>(column.begin(), column.end()), bins));
        }
    }
    return spec;
}

RangeAccumulator::RangeAccumulator(Eigen::Index n_proj)
    : min_(Eigen::VectorXd::Constant(n_proj, std::numeric_limits<double>::infinity())),
      max_(Eigen::VectorXd::Constant(n_proj, -std::numeric_limits<double>::infinity())) {}

void RangeAccumulator::add(const Eigen::MatrixXd& projected) {
    if (projected.cols() != min_.size()) {
        throw DataError("projected width does not match accumulator");
    }
    if (projected.rows() == 0) return;
    min_ = min_.cwiseMin(projected.colwise().minCoeff().transpose());
    max_ = max_.cwiseMax(projected.colwise().maxCoeff().transpose());
    empty_ = false;
}

HistogramSpec RangeAccumulator::finish(Eigen::Index bins, bool cumulative) const {
    if (empty_) {
        throw DataError("cannot fit bin edges on an empty pool");
    }
    Eigen::MatrixXd bounds(2, min_.size());
    bounds.row(0) = min_.transpose();
    bounds.row(1) = max_.transpose();
    return fit_bin_edges(bounds, bins, EdgeMode::equal_width, cumulative);
}

SetDescriptor histogram_descriptor(const Eigen::MatrixXd& projected, const HistogramSpec& spec) {
    if (projected.cols() != spec.n_proj()) {
        throw DataError("projected matrix has " + std::to_string(projected.cols()) +
                        " dims, histogram spec expects " + std::to_string(spec.n_proj()));
    }
    if (projected.rows() < 1) {
        throw DataError("cannot describe an empty set");
    }
    const Eigen::Index bins = spec.bins;
    const double total = double(projected.rows());
    SetDescriptor descriptor;
    descriptor.spec_id = spec.identity();
    descriptor.cumulative = spec.cumulative;
    descriptor.values = Eigen::VectorXd::Zero(spec.descriptor_size());

    std::vector<Eigen::Index> counts(static_cast<std::size_t>(bins));
    for (Eigen::Index j = 0; j < spec.n_proj(); ++j) {
        std::fill(counts.begin(), counts.end(), 0);
        const auto& edges = spec.edges[std::size_t(j)];
        if (spec.degenerate[std::size_t(j)]) {
            counts[0] = projected.rows();
        } else {
            // Bin index = number of interior edges <= v; this yields half-open
            // bins, a closed last bin, and clamping on both sides.
            const auto interior_begin = edges.begin() + 1;
            const auto interior_end = edges.end() - 1;
            for (Eigen::Index i = 0; i < projected.rows(); ++i) {
                const double v = projected(i, j);
                const auto k = std::upper_bound(interior_begin, interior_end, v) - interior_begin;
                ++counts[std::size_t(k)];
            }
        }
        auto out = descriptor.values.segment(j * bins, bins);
        Eigen::Index running = 0;
        for (Eigen::Index k = 0; k < bins; ++k) {
            running = spec.cumulative ? running + counts[std::size_t(k)] : counts[std::size_t(k)];
            out(k) = double(running) / total;
        }
    }
    return descriptor;
}

double swd1(const SetDescriptor& x, const SetDescriptor& y) {
    if (x.spec_id != y.spec_id || x.values.size() != y.values.size()) {
        throw DataError("swd1: descriptors come from different histogram specs");
    }
    if (!x.cumulative || !y.cumulative) {
        throw DataError("swd1: descriptors must be cumulative");
    }
    return (x.values - y.values).cwiseAbs().sum();
}

}  // namespace sinbad
