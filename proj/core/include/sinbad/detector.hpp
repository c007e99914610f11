#pragma once

#include "sinbad/descriptor_model.hpp"
#include "sinbad/gaussian_model.hpp"
#include "sinbad/knn.hpp"
#include "sinbad/manifest.hpp"
#include "sinbad/metrics.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sinbad {

enum class Scorer { maha, knn };
enum class RepeatReduce { mean, median };

const char* to_string(Scorer scorer);
Scorer parse_scorer(std::string_view text);
const char* to_string(RepeatReduce reduce);
RepeatReduce parse_repeat_reduce(std::string_view text);

/// Everything needed to fit and score one granularity level.
struct LevelConfig {
    std::string level_id = "ts";
    DescriptorParams descriptor;
    Scorer scorer = Scorer::maha;
    Eigen::Index k = 1;
    double alpha = kDefaultShrinkage;
    bool whitening = true;
    double weight = 1.0;
    int repeats = 1;
    RepeatReduce repeat_reduce = RepeatReduce::mean;
    bool standardize = false;  // z-score group outputs against training scores

    void validate() const;

    /// Defaults per known level: "block3"/"block4" (1000 projections, 5 bins,
    /// kNN, weight 1), "raw_pixels" (10 projections, 5 bins, kNN, no whitening,
    /// 32 repeats reduced by median, weight 0.1) and anything else treated as a
    /// time-series level (100 projections, 20 bins, Mahalanobis, weight 1).
    static LevelConfig defaults_for(std::string_view level_id);
};

/// Crop ratios and the lattice stride of crop centers, both as fractions of
/// the image extent.
struct CropSchedule {
    std::vector<double> ratios{1.0, 0.7, 0.5, 0.33};
    double center_stride = 0.25;

    void validate() const;

    /// Crop centers (x, y) on the stride lattice that keep a crop of the given
    /// ratio fully inside the unit square. Ratio 1 yields only (0.5, 0.5).
    std::vector<std::pair<double, double>> centers(double ratio) const;
};

/// Identifies one element-set group of a sample: level, crop ratio and crop center.
struct GroupKey {
    std::string level;
    std::string ratio;
    std::string center;

    auto operator<=>(const GroupKey&) const = default;

    /// level <- "level" (default "default"), ratio <- "crop_ratio" (default
    /// "1"), center <- every other key as "k=v" joined by ';'.
    static GroupKey from_keys(const GroupKeys& keys);
    std::string describe() const;
};

struct Sample {
    std::string id;
    Label label = Label::unknown;
    std::string label_name;
    std::map<GroupKey, ElementMatrix> sets;
};

/// Groups manifest entries by sample id and reads their containers.
std::vector<Sample> load_samples(const DatasetManifest& manifest);

/// Affine z-scoring of raw group scores; identity unless the level standardizes.
struct ScoreNorm {
    double center = 0.0;
    double scale = 1.0;
};

struct GroupModel {
    GroupKey key;
    std::uint64_t seed = 0;
    DescriptorModel descriptor;
    GaussianModel gaussian;
    TrainBank bank;
    ScoreNorm maha_norm;  // from in-sample training scores
    ScoreNorm knn_norm;   // from leave-one-out training scores

    double score(const ElementMatrix& elements, Scorer scorer) const;
    double score(const SetDescriptor& descriptor, Scorer scorer) const;
};

struct LevelModel {
    LevelConfig config;
    std::vector<std::vector<GroupModel>> repeats;  // [repeat][group]
};

struct SampleScore {
    double final = 0.0;
    std::map<std::string, double> levels;
};

/// Deterministic per-(level, repeat) seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view level_id, int repeat);

class Detector {
public:
    Detector() = default;
    Detector(std::uint64_t seed, std::vector<LevelModel> levels);

    std::uint64_t seed() const { return seed_; }
    const std::vector<LevelModel>& levels() const { return levels_; }

    /// Per level: reduce over repeats of (mean over ratios of (mean over centers
    /// of the group score)); final = weighted mean of level scores.
    SampleScore score(const Sample& sample, std::optional<Scorer> scorer = std::nullopt) const;

    /// One SampleScore per requested scorer, describing each group only once.
    std::vector<SampleScore> score_with(const Sample& sample, std::span<const Scorer> scorers) const;

    /// Directory layout: detector.json plus <level>/repeat-<r>/group-<g>.* files.
    void save(const std::filesystem::path& dir) const;
    static Detector load(const std::filesystem::path& dir);

private:
    std::uint64_t seed_ = 0;
    std::vector<LevelModel> levels_;
};

/**
 * Fits one descriptor model, Gaussian model and kNN bank per (level, crop
 * group, repeat) on training samples only. Levels without an entry in
 * `configs` use LevelConfig::defaults_for.
 *
 * Throws DataError on non-normal training samples, a sample missing a group
 * the others have, or inconsistent element dimensions within a group.
 */
Detector fit_detector(std::span<const Sample> training, const std::vector<LevelConfig>& configs,
                      std::uint64_t seed);

SampleScore score_sample(const Detector& detector, const Sample& sample,
                         std::optional<Scorer> scorer = std::nullopt);

/// Level-score combination: sum(w * s) / sum(w).
double combine_levels(std::span<const double> scores, std::span<const double> weights);

/// Runs `evaluate` with seeds base_seed, base_seed + 1, ... and reports the
/// mean and sample standard deviation of the returned metric.
MeanStd run_repeats(const std::function<double(std::uint64_t)>& evaluate, int n,
                    std::uint64_t base_seed = 0);

}  // namespace sinbad
