#include "sinbad/gaussian_model.hpp"

#include "binary.hpp"
#include "sinbad/error.hpp"
#include "sinbad/io.hpp"

#include <Eigen/SVD>
#include <json.hpp>

#include <cmath>
#include <limits>
#include <ostream>

namespace sinbad {

using nlohmann::json;

Moments estimate_moments(const Eigen::MatrixXd& samples) {
    if (samples.rows() < 1) {
        throw DataError("cannot estimate moments of zero samples");
    }
    Moments m;
    m.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - m.mean.transpose();
    m.covariance = centered.transpose() * centered / double(samples.rows());
    return m;
}

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd directions,
                             Eigen::VectorXd eigenvalues, double floor, double alpha,
                             bool whitening_enabled)
    : mean_(std::move(mean)),
      directions_(std::move(directions)),
      eigenvalues_(std::move(eigenvalues)),
      floor_(floor),
      alpha_(alpha),
      whitening_(whitening_enabled) {
    if (directions_.rows() != mean_.size() && directions_.cols() > 0) {
        throw DataError("gaussian model directions do not match the mean dimension");
    }
    if (directions_.cols() != eigenvalues_.size()) {
        throw DataError("gaussian model has mismatched eigenvalue count");
    }
    if ((eigenvalues_.array() <= 0.0).any() || (!full_rank() && !(floor_ > 0.0))) {
        throw DegenerateModelError("gaussian model covariance is not positive definite");
    }
}

void GaussianModel::check_dim(Eigen::Index n) const {
    if (n != mean_.size()) {
        throw DataError("descriptor has " + std::to_string(n) + " dims, model expects " +
                        std::to_string(mean_.size()));
    }
}

Eigen::MatrixXd GaussianModel::covariance() const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd sigma = directions_ * eigenvalues_.asDiagonal() * directions_.transpose();
    if (!full_rank()) {
        sigma += floor_ * (Eigen::MatrixXd::Identity(d, d) - directions_ * directions_.transpose());
    }
    return sigma;
}

Eigen::MatrixXd GaussianModel::whitener() const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd w = directions_ * eigenvalues_.cwiseSqrt().cwiseInverse().asDiagonal() *
                        directions_.transpose();
    if (!full_rank()) {
        w += (Eigen::MatrixXd::Identity(d, d) - directions_ * directions_.transpose()) /
             std::sqrt(floor_);
    }
    return w;
}

Eigen::VectorXd GaussianModel::whiten(const Eigen::Ref<const Eigen::VectorXd>& h) const {
    check_dim(h.size());
    const Eigen::VectorXd residual = h - mean_;
    const Eigen::VectorXd coords = directions_.transpose() * residual;
    Eigen::VectorXd out = directions_ * coords.cwiseQuotient(eigenvalues_.cwiseSqrt());
    if (!full_rank()) {
        out += (residual - directions_ * coords) / std::sqrt(floor_);
    }
    return out;
}

double GaussianModel::mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& h) const {
    check_dim(h.size());
    const Eigen::VectorXd residual = h - mean_;
    const Eigen::VectorXd coords = directions_.transpose() * residual;
    double score = coords.cwiseAbs2().cwiseQuotient(eigenvalues_).sum();
    if (!full_rank()) {
        score += (residual - directions_ * coords).squaredNorm() / floor_;
    }
    return score;
}

GaussianModel fit_gaussian(const Eigen::MatrixXd& descriptors, double alpha,
                           bool whitening_enabled) {
    const Eigen::Index n = descriptors.rows();
    const Eigen::Index d = descriptors.cols();
    if (n < 2) {
        throw DataError("gaussian model needs at least 2 training descriptors, got " +
                        std::to_string(n));
    }
    if (d < 1 || !descriptors.allFinite()) {
        throw DataError("training descriptors must be non-empty and finite");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("shrinkage alpha must lie in [0, 1]");
    }
    Eigen::VectorXd mean = descriptors.colwise().mean().transpose();
    if (!whitening_enabled) {
        return GaussianModel(std::move(mean), Eigen::MatrixXd(d, 0), Eigen::VectorXd(0), 1.0,
                             alpha, false);
    }

    const Eigen::MatrixXd centered = descriptors.rowwise() - mean.transpose();
    // Thin SVD of the centered data: S = V diag(s^2 / n) V^T.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd& singular = svd.singularValues();
    const Eigen::VectorXd variances = singular.cwiseAbs2() / double(n);
    const double trace = variances.sum();
    if (!(trace > 0.0)) {
        throw DegenerateModelError("degenerate covariance: training descriptors are identical");
    }

    const double tol = singular(0) * double(std::max(n, d)) * std::numeric_limits<double>::epsilon();
    Eigen::Index rank = 0;
    while (rank < singular.size() && singular(rank) > tol) ++rank;

    const double floor = alpha * trace / double(d);
    if (rank < d && !(floor > 0.0)) {
        throw DegenerateModelError("singular covariance (rank " + std::to_string(rank) + " < " +
                                   std::to_string(d) + "); use shrinkage alpha > 0");
    }
    Eigen::VectorXd eigenvalues =
        ((1.0 - alpha) * variances.head(rank)).array() + floor;
    return GaussianModel(std::move(mean), svd.matrixV().leftCols(rank), std::move(eigenvalues),
                         rank < d ? floor : 0.0, alpha, true);
}

double mahalanobis_score(const GaussianModel& model, const Eigen::Ref<const Eigen::VectorXd>& h) {
    return model.mahalanobis(h);
}

namespace {

constexpr char kModelMagic[4] = {'S', 'I', 'N', 'M'};
constexpr std::uint16_t kModelVersion = 1;
constexpr std::uint16_t kFlagWhitening = 1;

}  // namespace

void save_gaussian_model(const GaussianModel& model, const std::filesystem::path& dir,
                         const std::string& stem) {
    detail::ByteWriter w;
    w.put_raw(kModelMagic, 4);
    w.put<std::uint16_t>(kModelVersion);
    w.put<std::uint16_t>(model.whitening_enabled() ? kFlagWhitening : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.dim()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.directions().cols()));
    w.put_f64(model.floor());
    w.put_f64(model.alpha());
    for (Eigen::Index i = 0; i < model.dim(); ++i) w.put_f64(model.mean()(i));
    for (Eigen::Index i = 0; i < model.eigenvalues().size(); ++i) w.put_f64(model.eigenvalues()(i));
    const auto& v = model.directions();
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i < v.rows(); ++i) w.put_f64(v(i, j));
    }
    atomic_write(dir / (stem + ".model.bin"), [&](std::ostream& out) {
        out.write(w.bytes().data(), std::streamsize(w.bytes().size()));
    });

    json doc;
    doc["format_version"] = kModelVersion;
    doc["dim"] = model.dim();
    doc["rank"] = model.directions().cols();
    doc["alpha"] = model.alpha();
    doc["floor"] = model.floor();
    doc["whitening_enabled"] = model.whitening_enabled();
    doc["covariance_convention"] = "population";
    atomic_write_text(dir / (stem + ".model.json"), doc.dump(2) + "\n");
}

GaussianModel load_gaussian_model(const std::filesystem::path& dir, const std::string& stem) {
    const auto path = dir / (stem + ".model.bin");
    if (!std::filesystem::exists(path)) {
        throw DataError("missing model blob " + path.string());
    }
    const std::string bytes = read_text_file(path);
    detail::ByteReader r(bytes, path.string());
    if (!r.get_magic(kModelMagic)) {
        throw DataError(path.string() + ": bad magic");
    }
    if (r.get<std::uint16_t>() != kModelVersion) {
        throw DataError(path.string() + ": unsupported version");
    }
    const bool whitening = (r.get<std::uint16_t>() & kFlagWhitening) != 0;
    const Eigen::Index d = r.get<std::uint32_t>();
    const Eigen::Index rank = r.get<std::uint32_t>();
    const double floor = r.get_f64();
    const double alpha = r.get_f64();
    Eigen::VectorXd mean(d);
    for (Eigen::Index i = 0; i < d; ++i) mean(i) = r.get_f64();
    Eigen::VectorXd eigenvalues(rank);
    for (Eigen::Index i = 0; i < rank; ++i) eigenvalues(i) = r.get_f64();
    Eigen::MatrixXd directions(d, rank);
    for (Eigen::Index j = 0; j < rank; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) directions(i, j) = r.get_f64();
    }
    if (!r.at_end()) {
        throw DataError(path.string() + ": trailing bytes");
    }
    return GaussianModel(std::move(mean), std::move(directions), std::move(eigenvalues), floor,
                         alpha, whitening);
}

}  // namespace sinbad
