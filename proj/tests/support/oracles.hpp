#pragma once

// Brute-force reference computations shared by unit and acceptance tests.
// Deliberately naive: they exist to disagree with the library when it is wrong.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace sinbad::oracle {

// Exact 1-D optimal transport between two equal-size multisets of bin
// indices: the cheapest of all n! matchings, cost |i - j| per unit mass.
inline double transport_cost(std::vector<int> a, std::vector<int> b) {
    const std::size_t n = a.size();
    std::sort(b.begin(), b.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) cost += std::abs(a[i] - b[i]);
        best = std::min(best, cost);
    } while (std::next_permutation(b.begin(), b.end()));
    return best / double(n);
}

// Fraction of (anomalous, normal) pairs where the anomalous one scores
// higher, ties counting one half.
inline double pair_count_auc(const std::vector<double>& scores, const std::vector<bool>& anomalous) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!anomalous[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (anomalous[j]) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

// (h - mu)^T sigma^{-1} (h - mu) through a dense LU inverse.
inline double dense_mahalanobis(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                                const Eigen::VectorXd& h) {
    const Eigen::MatrixXd inv = sigma.fullPivLu().inverse();
    const Eigen::VectorXd d = h - mu;
    return d.dot(inv * d);
}

// Shrunk population covariance, written out element by element.
inline Eigen::MatrixXd shrunk_covariance(const Eigen::MatrixXd& x, double alpha) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) mu += x.row(i).transpose();
    mu /= double(n);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) s(a, b) += (x(i, a) - mu(a)) * (x(i, b) - mu(b));
        }
    }
    s /= double(n);
    const double scale = s.trace() / double(d);
    Eigen::MatrixXd sigma = (1.0 - alpha) * s;
    for (Eigen::Index a = 0; a < d; ++a) sigma(a, a) += alpha * scale;
    return sigma;
}

}  // namespace sinbad::oracle
