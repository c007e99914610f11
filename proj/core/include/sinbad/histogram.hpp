#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

namespace sinbad {

enum class EdgeMode { equal_width, quantile };

const char* to_string(EdgeMode mode);
EdgeMode parse_edge_mode(std::string_view text);  // accepts "width"/"equal_width"/"quantile"

/**
 * Bin edges per projection dimension, fit once on the pooled training values
 * so that every sample's descriptor lives in the same coordinates.
 *
 * edges[j] holds bins+1 ascending values from min to max of dimension j. A
 * dimension whose training values are all equal is flagged degenerate and
 * sends all mass to bin 0.
 */
struct HistogramSpec {
    Eigen::Index bins = 20;
    bool cumulative = true;
    EdgeMode edge_mode = EdgeMode::equal_width;
    std::vector<std::vector<double>> edges;
    std::vector<std::uint8_t> degenerate;

    Eigen::Index n_proj() const { return Eigen::Index(edges.size()); }
    Eigen::Index descriptor_size() const { return n_proj() * bins; }

    /// Content hash; two specs with the same id bin identically.
    std::uint64_t identity() const;
};

/// `pooled` holds one column per projection dimension, one row per training value.
HistogramSpec fit_bin_edges(const Eigen::MatrixXd& pooled, Eigen::Index bins, EdgeMode mode,
                            bool cumulative = true);

/// Incremental min/max accumulator for equal-width edges over large pools.
class RangeAccumulator {
public:
    explicit RangeAccumulator(Eigen::Index n_proj);
    void add(const Eigen::MatrixXd& projected);
    HistogramSpec finish(Eigen::Index bins, bool cumulative = true) const;

private:
    Eigen::VectorXd min_;
    Eigen::VectorXd max_;
    bool empty_ = true;
};

struct SetDescriptor {
    Eigen::VectorXd values;  // n_proj * bins, dimension-major
    std::uint64_t spec_id = 0;
    bool cumulative = true;
};

/**
 * Fraction of elements per bin, per projection dimension, concatenated.
 * Bins are [e_k, e_{k+1}) with the last bin closed; values outside the
 * training range clamp into the first or last bin. With a cumulative spec
 * the fractions are prefix-summed within each dimension.
 */
SetDescriptor histogram_descriptor(const Eigen::MatrixXd& projected, const HistogramSpec& spec);

/// Sliced 1-Wasserstein distance: L1 distance between cumulative descriptors.
double swd1(const SetDescriptor& x, const SetDescriptor& y);

}  // namespace sinbad
