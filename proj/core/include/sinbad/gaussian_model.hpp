#pragma once

#include "sinbad/element_set.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>

namespace sinbad {

inline constexpr double kDefaultShrinkage = 0.1;

/// Sample mean and population covariance (divide by N) of row vectors.
struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

Moments estimate_moments(const Eigen::MatrixXd& samples);

/**
 * Gaussian model over descriptors with a shrunk covariance
 *
 *     sigma = (1 - alpha) S + alpha (trace(S) / D) I,
 *
 * S being the population covariance of the training descriptors. Because
 * D usually exceeds the number of training samples, sigma is kept in
 * factored form: sigma = V diag(lambda) V^T + floor (I - V V^T), where V
 * spans the centered training data. Both the Mahalanobis form and the
 * symmetric whitener sigma^{-1/2} are applied in O(D * rank).
 *
 * With whitening disabled sigma is the identity and the score reduces to the
 * squared Euclidean distance to the mean.
 */
class GaussianModel {
public:
    GaussianModel() = default;
    GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd directions, Eigen::VectorXd eigenvalues,
                  double floor, double alpha, bool whitening_enabled);

    Eigen::Index dim() const { return mean_.size(); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& directions() const { return directions_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    double floor() const { return floor_; }
    double alpha() const { return alpha_; }
    bool whitening_enabled() const { return whitening_; }

    /// Dense D x D shrunk covariance. Intended for inspection and tests.
    Eigen::MatrixXd covariance() const;
    /// Dense symmetric W with W^T W = sigma^{-1}.
    Eigen::MatrixXd whitener() const;

    /// W (h - mean).
    Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& h) const;
    /// (h - mean)^T sigma^{-1} (h - mean).
    double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& h) const;

private:
    void check_dim(Eigen::Index n) const;
    bool full_rank() const { return directions_.cols() == mean_.size(); }

    Eigen::VectorXd mean_;
    Eigen::MatrixXd directions_;   // D x r, orthonormal columns
    Eigen::VectorXd eigenvalues_;  // r shrunk eigenvalues along directions_
    double floor_ = 1.0;           // eigenvalue on the orthogonal complement
    double alpha_ = kDefaultShrinkage;
    bool whitening_ = true;
};

/**
 * Fits the model on N x D training descriptors (one per row).
 *
 * Throws DataError for fewer than 2 samples or non-finite input, and
 * DegenerateModelError when trace(S) is zero or, with alpha = 0, when S is
 * singular.
 */
GaussianModel fit_gaussian(const Eigen::MatrixXd& descriptors, double alpha = kDefaultShrinkage,
                           bool whitening_enabled = true);

/// Squared Mahalanobis distance of a descriptor to the model mean.
double mahalanobis_score(const GaussianModel& model, const Eigen::Ref<const Eigen::VectorXd>& h);

/// Binary blob `<stem>.model.bin` (magic "SINM", little-endian f64 payload)
/// plus a JSON sidecar `<stem>.model.json`.
void save_gaussian_model(const GaussianModel& model, const std::filesystem::path& dir,
                         const std::string& stem);
GaussianModel load_gaussian_model(const std::filesystem::path& dir, const std::string& stem);

}  // namespace sinbad
