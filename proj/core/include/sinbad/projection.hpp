#pragma once

#include "sinbad/element_set.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace sinbad {

enum class ProjectionMode { gaussian, identity, pca };

const char* to_string(ProjectionMode mode);
ProjectionMode parse_projection_mode(std::string_view text);

/// Projection directions as the columns of an n_dims x n_proj matrix.
struct ProjectionBasis {
    Eigen::MatrixXd matrix;
    ProjectionMode mode = ProjectionMode::gaussian;
    std::uint64_t seed = 0;

    Eigen::Index n_dims() const { return matrix.rows(); }
    Eigen::Index n_proj() const { return matrix.cols(); }
};

/**
 * Builds a projection basis.
 *
 *  - gaussian: i.i.d. N(0, 1) entries drawn from a mt19937_64 seeded with `seed`.
 *    Entries are rounded to float32 so a basis persisted in the float32 element
 *    container reloads bit-identically.
 *  - identity: the n_dims x n_dims identity; `n_proj` is ignored.
 *  - pca: the leading `n_proj` eigenvectors (descending eigenvalue) of the
 *    covariance of all training elements pooled together, each signed so its
 *    largest-magnitude entry is positive. `n_proj` is capped at n_dims.
 *
 * Throws ConfigError when pca is requested without training elements.
 */
ProjectionBasis sample_projection(Eigen::Index n_dims, Eigen::Index n_proj, ProjectionMode mode,
                                  std::uint64_t seed,
                                  std::span<const ElementMatrix> training = {});

/// N_E x N_P matrix whose row i holds element i projected onto every basis column.
Eigen::MatrixXd project_elements(const ElementMatrix& elements, const ProjectionBasis& basis);

}  // namespace sinbad
