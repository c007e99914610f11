#pragma once

#include "sinbad/element_set.hpp"
#include "sinbad/gaussian_model.hpp"

#include <filesystem>
#include <optional>

namespace sinbad {

/**
 * Whitened training descriptors for exact nearest-neighbour scoring.
 *
 * Rows are stored as float32, the element-set container's payload type, so
 * a persisted bank reloads bit-identically. Queries are whitened in double
 * and rounded the same way before distances are taken; a query equal to a
 * training descriptor therefore scores exactly 0.
 */
struct TrainBank {
    ElementMatrix whitened;  // N_S x D
    Eigen::Index k = 1;

    Eigen::Index size() const { return whitened.rows(); }
};

TrainBank build_bank(const GaussianModel& model, const Eigen::MatrixXd& descriptors,
                     Eigen::Index k = 1);

/// Mean squared distance from the whitened query to its k nearest bank rows,
/// skipping row `exclude` when given (leave-one-out scoring of training data).
double knn_score(const TrainBank& bank, const GaussianModel& model,
                 const Eigen::Ref<const Eigen::VectorXd>& h,
                 std::optional<Eigen::Index> exclude = std::nullopt);

void save_bank(const TrainBank& bank, const std::filesystem::path& path);
TrainBank load_bank(const std::filesystem::path& path, Eigen::Index k);

}  // namespace sinbad
