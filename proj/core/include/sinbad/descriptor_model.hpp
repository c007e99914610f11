#pragma once

#include "sinbad/histogram.hpp"
#include "sinbad/projection.hpp"

#include <filesystem>
#include <span>

namespace sinbad {

struct DescriptorParams {
    Eigen::Index projections = 100;
    Eigen::Index bins = 20;
    ProjectionMode mode = ProjectionMode::gaussian;
    EdgeMode edge_mode = EdgeMode::equal_width;
    bool cumulative = true;
    std::uint64_t seed = 0;
};

/// A fitted projection basis plus bin edges: maps any element set to its descriptor.
struct DescriptorModel {
    ProjectionBasis basis;
    HistogramSpec spec;

    Eigen::Index descriptor_size() const { return spec.descriptor_size(); }
    SetDescriptor describe(const ElementMatrix& elements) const;
};

struct FittedDescriptors {
    DescriptorModel model;
    Eigen::MatrixXd training;  // one descriptor per row, in input order
};

/// Samples the basis, fits bin edges on the pooled projected training
/// elements, and describes every training set.
FittedDescriptors fit_descriptor_model(std::span<const ElementMatrix> training,
                                       const DescriptorParams& params);

/// Basis as an n_dims x n_proj element-set container plus a JSON sidecar
/// (`<stem>.json`) with mode, seed, bins and edges.
void save_descriptor_model(const DescriptorModel& model, const std::filesystem::path& dir,
                           const std::string& stem);
DescriptorModel load_descriptor_model(const std::filesystem::path& dir, const std::string& stem);

}  // namespace sinbad
