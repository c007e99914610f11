#include "sinbad/metrics.hpp"

#include "sinbad/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sinbad {

namespace {

std::vector<ScoredSample> sorted_by_score(std::span<const ScoredSample> samples) {
    std::vector<ScoredSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });
    return sorted;
}

}  // namespace

double roc_auc(std::span<const ScoredSample> samples) {
    std::size_t n_anomalous = 0;
    for (const auto& s : samples) {
        if (std::isnan(s.score)) throw DataError("roc_auc: NaN score");
        n_anomalous += s.anomalous ? 1 : 0;
    }
    const std::size_t n_normal = samples.size() - n_anomalous;
    if (n_anomalous == 0 || n_normal == 0) {
        throw DataError("roc_auc needs both normal and anomalous samples");
    }

    const auto sorted = sorted_by_score(samples);
    // Sum of 1-based mid-ranks of the anomalous samples.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::size_t tied_anomalous = 0;
        while (j < sorted.size() && sorted[j].score == sorted[i].score) {
            tied_anomalous += sorted[j].anomalous ? 1 : 0;
            ++j;
        }
        const double mid_rank = 0.5 * double(i + 1 + j);
        rank_sum += mid_rank * double(tied_anomalous);
        i = j;
    }
    const double na = double(n_anomalous);
    const double u = rank_sum - na * (na + 1.0) / 2.0;
    return u / (na * double(n_normal));
}

std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
    std::size_t n_anomalous = 0;
    for (const auto& s : samples) n_anomalous += s.anomalous ? 1 : 0;
    const std::size_t n_normal = samples.size() - n_anomalous;
    if (n_anomalous == 0 || n_normal == 0) {
        throw DataError("roc_curve needs both normal and anomalous samples");
    }
    auto sorted = sorted_by_score(samples);
    std::reverse(sorted.begin(), sorted.end());

    std::vector<RocPoint> curve;
    curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double threshold = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == threshold) {
            (sorted[i].anomalous ? tp : fp) += 1;
            ++i;
        }
        curve.push_back({threshold, double(fp) / double(n_normal), double(tp) / double(n_anomalous)});
    }
    return curve;
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / double(values.size() - 1));
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw DataError("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace sinbad
