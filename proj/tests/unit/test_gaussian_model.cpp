#include "oracles.hpp"
#include "sinbad/error.hpp"
#include "sinbad/gaussian_model.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sinbad;

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

// Rows drawn from N(0, A A^T) for a random mixing matrix A.
Eigen::MatrixXd correlated_samples(Eigen::Index n, Eigen::Index d, unsigned seed) {
    const Eigen::MatrixXd mix = gaussian_matrix(d, d, seed);
    return gaussian_matrix(n, d, seed + 1) * mix.transpose();
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Moments, PopulationConventionByHand) {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 2, 0;
    const auto m = estimate_moments(x);
    EXPECT_EQ(m.mean, Eigen::Vector2d(1, 0));
    EXPECT_DOUBLE_EQ(m.covariance(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.covariance(1, 1), 0.0);
    EXPECT_DOUBLE_EQ(m.covariance(0, 1), 0.0);
}

TEST(GaussianModel, HandExampleWithShrinkage) {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 2, 0;
    const auto model = fit_gaussian(x, 0.5);
    EXPECT_TRUE(model.mean().isApprox(Eigen::Vector2d(1, 0)));
    // S = diag(1, 0), trace/D = 0.5: sigma = 0.5 S + 0.5 * 0.5 I = diag(0.75, 0.25).
    EXPECT_TRUE(model.covariance().isApprox(Eigen::Vector2d(0.75, 0.25).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST(GaussianModel, SingularWithoutShrinkage) {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 2, 0;
    try {
        fit_gaussian(x, 0.0);
        FAIL() << "expected DegenerateModelError";
    } catch (const DegenerateModelError& e) {
        EXPECT_NE(std::string(e.what()).find("singular covariance"), std::string::npos);
    }
}

TEST(GaussianModel, FullShrinkageIsIsotropic) {
    const auto x = correlated_samples(30, 6, 1);
    const auto model = fit_gaussian(x, 1.0);
    const double scale = oracle::shrunk_covariance(x, 0.0).trace() / 6.0;
    EXPECT_TRUE(model.covariance().isApprox(scale * Eigen::MatrixXd::Identity(6, 6), 1e-12));
}

TEST(GaussianModel, IdenticalDescriptorsAreDegenerate) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(5, 3, 0.25);
    try {
        fit_gaussian(x, 0.1);
        FAIL() << "expected DegenerateModelError";
    } catch (const DegenerateModelError& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate covariance"), std::string::npos);
    }
}

TEST(GaussianModel, InputErrors) {
    EXPECT_THROW(fit_gaussian(Eigen::MatrixXd::Zero(1, 3)), DataError);
    Eigen::MatrixXd x = gaussian_matrix(4, 2, 2);
    x(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(fit_gaussian(x), DataError);
    EXPECT_THROW(fit_gaussian(gaussian_matrix(4, 2, 2), 1.5), ConfigError);
    EXPECT_THROW(fit_gaussian(gaussian_matrix(4, 2, 2), -0.1), ConfigError);
}

TEST(GaussianModel, CovarianceMatchesShrinkageFormula) {
    for (auto [n, d] : {std::pair{40, 5}, {8, 20}, {3, 3}}) {
        const auto x = correlated_samples(n, d, unsigned(n * 7 + d));
        for (double alpha : {0.1, 0.37}) {
            const auto model = fit_gaussian(x, alpha);
            EXPECT_TRUE(model.covariance().isApprox(oracle::shrunk_covariance(x, alpha), 1e-10))
                << n << "x" << d << " alpha " << alpha;
        }
    }
}

TEST(Mahalanobis, CenterScoresZero) {
    const auto x = correlated_samples(12, 4, 3);
    const auto model = fit_gaussian(x);
    EXPECT_NEAR(mahalanobis_score(model, model.mean()), 0.0, 1e-24);
}

TEST(Mahalanobis, IdentityCovarianceIsSquaredEuclidean) {
    Eigen::MatrixXd x(2, 2);
    x << -1, -1, 1, 1;
    const auto model = fit_gaussian(x, 0.1, false);
    EXPECT_DOUBLE_EQ(mahalanobis_score(model, Eigen::Vector2d(3, 4)), 25.0);
    EXPECT_EQ(model.covariance(), Eigen::Matrix2d::Identity());
}

TEST(Mahalanobis, MatchesDenseInverse) {
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto x = correlated_samples(10 + seed, 5, 100 + seed);
        const auto model = fit_gaussian(x, 0.1);
        const Eigen::VectorXd h = gaussian_matrix(5, 1, 500 + seed).col(0) * 2.0;
        const auto sigma = oracle::shrunk_covariance(x, 0.1);
        const auto mu = x.colwise().mean().transpose();
        EXPECT_LT(relative_error(mahalanobis_score(model, h), oracle::dense_mahalanobis(sigma, mu, h)), 1e-8);
    }
}

TEST(Mahalanobis, HighDimensionalFewSamplesMatchesDenseInverse) {
    const auto x = gaussian_matrix(6, 40, 8);
    const auto model = fit_gaussian(x, 0.1);
    const Eigen::VectorXd h = gaussian_matrix(40, 1, 9).col(0);
    const auto sigma = oracle::shrunk_covariance(x, 0.1);
    EXPECT_LT(relative_error(mahalanobis_score(model, h),
                             oracle::dense_mahalanobis(sigma, x.colwise().mean().transpose(), h)),
              1e-8);
}

TEST(Mahalanobis, EqualsWhitenedSquaredNorm) {
    const auto x = gaussian_matrix(7, 15, 10);
    const auto model = fit_gaussian(x, 0.2);
    const Eigen::MatrixXd w = model.whitener();
    // W^T W = sigma^-1
    EXPECT_TRUE((w.transpose() * w * model.covariance()).isApprox(Eigen::MatrixXd::Identity(15, 15), 1e-9));
    for (unsigned s = 0; s < 5; ++s) {
        const Eigen::VectorXd h = gaussian_matrix(15, 1, 20 + s).col(0);
        const double m = mahalanobis_score(model, h);
        EXPECT_LT(relative_error(model.whiten(h).squaredNorm(), m), 1e-8);
        EXPECT_LT(relative_error((w * (h - model.mean())).squaredNorm(), m), 1e-8);
    }
}

TEST(Mahalanobis, ApproachesIsotropicScoreAsAlphaGrowsToOne) {
    const auto x = correlated_samples(25, 6, 30);
    const Eigen::VectorXd h = gaussian_matrix(6, 1, 31).col(0);
    const double scale = oracle::shrunk_covariance(x, 0.0).trace() / 6.0;
    const double isotropic = (h - x.colwise().mean().transpose()).squaredNorm() / scale;
    double previous_gap = std::numeric_limits<double>::infinity();
    for (double alpha : {0.5, 0.9, 0.99, 0.999}) {
        const double gap = std::abs(mahalanobis_score(fit_gaussian(x, alpha), h) - isotropic);
        EXPECT_LT(gap, previous_gap);
        previous_gap = gap;
    }
    EXPECT_LT(previous_gap / isotropic, 1e-2);
}

TEST(Mahalanobis, TranslationInvariance) {
    const auto x = correlated_samples(15, 4, 40);
    const Eigen::VectorXd h = gaussian_matrix(4, 1, 41).col(0);
    const Eigen::RowVectorXd shift = Eigen::RowVectorXd::LinSpaced(4, 3.0, -5.0);
    const Eigen::MatrixXd shifted = x.rowwise() + shift;
    const double a = mahalanobis_score(fit_gaussian(x), h);
    const double b = mahalanobis_score(fit_gaussian(shifted), h + shift.transpose());
    EXPECT_LT(relative_error(b, a), 1e-9);
}

TEST(Mahalanobis, DimensionMismatch) {
    const auto model = fit_gaussian(gaussian_matrix(5, 3, 50));
    EXPECT_THROW(mahalanobis_score(model, Eigen::VectorXd::Zero(4)), DataError);
}

TEST(GaussianModel, PersistenceRoundTripIsExact) {
    test::TempDir dir;
    for (bool whiten : {true, false}) {
        const auto x = gaussian_matrix(6, 10, 60);
        const auto model = fit_gaussian(x, 0.15, whiten);
        save_gaussian_model(model, dir.path(), "g");
        const auto back = load_gaussian_model(dir.path(), "g");
        EXPECT_EQ(back.mean(), model.mean());
        EXPECT_EQ(back.directions(), model.directions());
        EXPECT_EQ(back.eigenvalues(), model.eigenvalues());
        EXPECT_EQ(back.floor(), model.floor());
        EXPECT_EQ(back.alpha(), 0.15);
        EXPECT_EQ(back.whitening_enabled(), whiten);
        const Eigen::VectorXd h = gaussian_matrix(10, 1, 61).col(0);
        EXPECT_EQ(mahalanobis_score(back, h), mahalanobis_score(model, h));
    }
    EXPECT_THROW(load_gaussian_model(dir.path(), "absent"), DataError);
}
