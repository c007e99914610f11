#include "sinbad/knn.hpp"

#include "sinbad/error.hpp"

#include <algorithm>
#include <vector>

namespace sinbad {

TrainBank build_bank(const GaussianModel& model, const Eigen::MatrixXd& descriptors,
                     Eigen::Index k) {
    if (descriptors.rows() < 1) {
        throw DataError("cannot build a kNN bank from zero descriptors");
    }
    if (k < 1 || k > descriptors.rows()) {
        throw ConfigError("kNN k must lie in [1, " + std::to_string(descriptors.rows()) + "], got " +
                          std::to_string(k));
    }
    TrainBank bank;
    bank.k = k;
    bank.whitened.resize(descriptors.rows(), descriptors.cols());
    for (Eigen::Index i = 0; i < descriptors.rows(); ++i) {
        bank.whitened.row(i) = model.whiten(descriptors.row(i).transpose()).cast<float>().transpose();
    }
    return bank;
}

double knn_score(const TrainBank& bank, const GaussianModel& model,
                 const Eigen::Ref<const Eigen::VectorXd>& h, std::optional<Eigen::Index> exclude) {
    const Eigen::Index available = bank.size() - (exclude ? 1 : 0);
    if (available < 1) {
        throw DataError("kNN bank is empty");
    }
    if (bank.whitened.cols() != model.dim()) {
        throw DataError("kNN bank width does not match the gaussian model");
    }
    const Eigen::Index k = std::min(bank.k, available);
    const Eigen::VectorXd query = model.whiten(h).cast<float>().cast<double>();

    std::vector<double> distances;
    distances.reserve(std::size_t(bank.size()));
    for (Eigen::Index i = 0; i < bank.size(); ++i) {
        if (exclude && *exclude == i) continue;
        distances.push_back(
            (bank.whitened.row(i).cast<double>().transpose() - query).squaredNorm());
    }
    std::partial_sort(distances.begin(), distances.begin() + k, distances.end());
    double total = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) total += distances[std::size_t(i)];
    return total / double(k);
}

void save_bank(const TrainBank& bank, const std::filesystem::path& path) {
    ElementSet set;
    set.elements = bank.whitened;
    write_element_set(set, path);
}

TrainBank load_bank(const std::filesystem::path& path, Eigen::Index k) {
    TrainBank bank;
    bank.whitened = read_element_set(path).elements;
    if (k < 1 || k > bank.size()) {
        throw ConfigError("kNN k out of range for the stored bank");
    }
    bank.k = k;
    return bank;
}

}  // namespace sinbad
