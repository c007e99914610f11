#include "sinbad/projection.hpp"

#include "sinbad/error.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace sinbad {

const char* to_string(ProjectionMode mode) {
    switch (mode) {
        case ProjectionMode::gaussian: return "gaussian";
        case ProjectionMode::identity: return "identity";
        case ProjectionMode::pca: return "pca";
    }
    return "?";
}

ProjectionMode parse_projection_mode(std::string_view text) {
    if (text == "gaussian") return ProjectionMode::gaussian;
    if (text == "identity") return ProjectionMode::identity;
    if (text == "pca") return ProjectionMode::pca;
    throw ConfigError("unknown projection mode '" + std::string(text) + "'");
}

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd matrix(rows, cols);
    // Column by column, so the first k directions do not depend on n_proj.
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            matrix(i, j) = static_cast<double>(static_cast<float>(normal(rng)));
        }
    }
    return matrix;
}

Eigen::MatrixXd pca_matrix(Eigen::Index n_dims, Eigen::Index n_proj,
                           std::span<const ElementMatrix> training) {
    Eigen::Index total = 0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_dims);
    for (const auto& elements : training) {
        if (elements.cols() != n_dims) {
            throw DataError("pca training elements have " + std::to_string(elements.cols()) +
                            " dims, expected " + std::to_string(n_dims));
        }
        sum += elements.cast<double>().colwise().sum().transpose();
        total += elements.rows();
    }
    if (total < 2) {
        throw DataError("pca projection needs at least two training elements");
    }
    const Eigen::VectorXd mean = sum / double(total);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(n_dims, n_dims);
    for (const auto& elements : training) {
        const Eigen::MatrixXd centered = elements.cast<double>().rowwise() - mean.transpose();
        scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    }
    scatter = scatter.selfadjointView<Eigen::Lower>();
    scatter /= double(total);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(scatter);
    if (solver.info() != Eigen::Success) {
        throw DegenerateModelError("eigendecomposition of the element covariance failed");
    }
    // Eigen returns ascending eigenvalues.
    Eigen::MatrixXd matrix(n_dims, n_proj);
    for (Eigen::Index j = 0; j < n_proj; ++j) {
        Eigen::VectorXd column = solver.eigenvectors().col(n_dims - 1 - j);
        Eigen::Index argmax = 0;
        column.cwiseAbs().maxCoeff(&argmax);
        if (column(argmax) < 0) column = -column;
        matrix.col(j) = column.cast<float>().cast<double>();
    }
    return matrix;
}

}  // namespace

ProjectionBasis sample_projection(Eigen::Index n_dims, Eigen::Index n_proj, ProjectionMode mode,
                                  std::uint64_t seed, std::span<const ElementMatrix> training) {
    if (n_dims < 1) {
        throw ConfigError("projection needs n_dims >= 1");
    }
    ProjectionBasis basis;
    basis.mode = mode;
    basis.seed = seed;
    switch (mode) {
        case ProjectionMode::gaussian:
            if (n_proj < 1) throw ConfigError("projection needs n_proj >= 1");
            basis.matrix = gaussian_matrix(n_dims, n_proj, seed);
            break;
        case ProjectionMode::identity:
            basis.matrix = Eigen::MatrixXd::Identity(n_dims, n_dims);
            break;
        case ProjectionMode::pca:
            if (training.empty()) {
                throw ConfigError("pca projection requires training elements");
            }
            if (n_proj < 1) throw ConfigError("projection needs n_proj >= 1");
            basis.matrix = pca_matrix(n_dims, std::min(n_proj, n_dims), training);
            break;
    }
    return basis;
}

Eigen::MatrixXd project_elements(const ElementMatrix& elements, const ProjectionBasis& basis) {
    if (elements.cols() != basis.n_dims()) {
        throw DataError("dimension mismatch: elements have " + std::to_string(elements.cols()) +
                        " dims, basis expects " + std::to_string(basis.n_dims()));
    }
    return elements.cast<double>() * basis.matrix;
}

}  // namespace sinbad
