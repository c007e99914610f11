#pragma once

#include "sinbad/detector.hpp"
#include "sinbad/uea.hpp"
#include "sinbad/window_pyramid.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sinbad {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kTimeSeriesLevel = "ts";

/// Optional per-level settings layered over LevelConfig::defaults_for.
struct TuningOverrides {
    std::optional<Eigen::Index> projections;
    std::optional<Eigen::Index> bins;
    std::optional<ProjectionMode> projection_mode;
    std::optional<EdgeMode> edge_mode;
    std::optional<bool> cumulative;
    std::optional<Scorer> scorer;
    std::optional<Eigen::Index> k;
    std::optional<double> alpha;
    std::optional<bool> whitening;
    std::optional<double> weight;
    std::optional<int> repeats;
    std::optional<RepeatReduce> repeat_reduce;
    std::optional<bool> standardize;

    void apply(LevelConfig& cfg) const;
};

enum class Protocol { uea, manifest };

struct DatasetConfig {
    Protocol protocol = Protocol::uea;
    std::string name;
    std::filesystem::path train;  // .ts file or manifest.json
    std::filesystem::path test;
    LabelMap labels;
    std::optional<Eigen::Index> min_length;  // series length filter (uea only)
    std::optional<Eigen::Index> max_length;
};

struct EvalConfig {
    DatasetConfig dataset;
    PyramidConfig pyramid;
    TuningOverrides tuning;                               // applied to every level
    std::map<std::string, TuningOverrides> level_tuning;  // then per level
    int repeats = 1;  // independent detector seeds; metric reported as mean +- std
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;

    LevelConfig resolve_level(std::string_view level_id) const;
    void validate() const;

    /// Sorted-key JSON of every setting; the fingerprint hashes exactly this.
    std::string canonical_json() const;
    std::string fingerprint() const;
};

/// Parses the JSON config (keys mirror the CLI flags). Relative dataset
/// paths resolve against `base_dir`. Throws ConfigError.
EvalConfig parse_eval_config(std::string_view json_text, const std::filesystem::path& base_dir);
EvalConfig load_eval_config(const std::filesystem::path& path);

struct ScoreRecord {
    int repeat = 0;
    std::string group;  // normal class (uea) or "all" (manifest)
    std::string sample_id;
    std::string label_name;
    bool anomalous = false;
    double score = 0.0;      // primary scorer
    double score_alt = 0.0;  // the other scorer
};

struct ClassResult {
    std::string name;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<double> auc;  // one per repeat
    std::vector<double> auc_alt;
};

struct EvalReport {
    int schema_version = kReportSchemaVersion;
    std::string dataset;
    std::string protocol;
    std::string scorer;
    std::string alt_scorer;  // empty when no alternative scorer was run
    std::string fingerprint;
    std::string config_json;
    std::vector<ClassResult> classes;   // uea: one per normal class; manifest: "all" + subtypes
    std::vector<double> repeat_auc;     // dataset-level AUC per repeat
    std::vector<double> repeat_auc_alt;
    MeanStd auc;
    MeanStd auc_alt;
    double runtime_seconds = 0.0;
    std::vector<ScoreRecord> scores;
    std::filesystem::path report_path;
    std::filesystem::path scores_path;

    std::string to_json() const;
};

/// Element sets for a series collection, one "ts"-level group per sample.
std::vector<Sample> pyramid_samples(const std::vector<TimeSeries>& series,
                                    const PyramidConfig& pyramid);

struct OneVsRestResult {
    std::vector<ClassResult> classes;  // single-repeat AUCs
    std::vector<ScoreRecord> scores;
    double mean_auc = 0.0;
    double mean_auc_alt = 0.0;
};

/**
 * Each training class in turn is normal: fit on the training samples with
 * that label_name, score every test sample, anomalous = label differs.
 * Dataset metric = mean ROC-AUC over classes.
 */
OneVsRestResult one_vs_rest(const std::vector<Sample>& train, const std::vector<Sample>& test,
                            const LevelConfig& level, std::uint64_t seed, int repeat_index = 0);

/// Full evaluation per the config; writes report.json, scores.csv, roc.csv and
/// score_histogram.csv atomically when output_dir is set.
EvalReport evaluate_dataset(const EvalConfig& config);

void write_report_files(EvalReport& report, const std::filesystem::path& dir);

}  // namespace sinbad
