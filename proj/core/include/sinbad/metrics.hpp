#pragma once

#include <span>
#include <vector>

namespace sinbad {

struct ScoredSample {
    double score = 0.0;
    bool anomalous = false;
};

/// Probability that a random anomalous sample outscores a random normal one,
/// ties counting one half (Mann-Whitney U / (n_a * n_n)). Computed from mid-ranks
/// in O(n log n). Throws DataError unless both classes are present.
double roc_auc(std::span<const ScoredSample> samples);

struct RocPoint {
    double threshold;
    double false_positive_rate;
    double true_positive_rate;
};

/// ROC polyline from (0,0) to (1,1), one vertex per distinct score.
std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(std::span<const double> values);
double median(std::vector<double> values);

}  // namespace sinbad
