#include "sinbad/detector.hpp"

#include "sinbad/error.hpp"
#include "sinbad/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <set>

namespace sinbad {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Scorer scorer) {
    return scorer == Scorer::maha ? "maha" : "knn";
}

Scorer parse_scorer(std::string_view text) {
    if (text == "maha") return Scorer::maha;
    if (text == "knn") return Scorer::knn;
    throw ConfigError("unknown scorer '" + std::string(text) + "'");
}

const char* to_string(RepeatReduce reduce) {
    return reduce == RepeatReduce::mean ? "mean" : "median";
}

RepeatReduce parse_repeat_reduce(std::string_view text) {
    if (text == "mean") return RepeatReduce::mean;
    if (text == "median") return RepeatReduce::median;
    throw ConfigError("unknown repeat reduction '" + std::string(text) + "'");
}

void LevelConfig::validate() const {
    if (level_id.empty()) throw ConfigError("level id must not be empty");
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw ConfigError("level '" + level_id + "': weight must be >= 0");
    }
    if (repeats < 1) throw ConfigError("level '" + level_id + "': repeats must be >= 1");
    if (k < 1) throw ConfigError("level '" + level_id + "': k must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("level '" + level_id + "': alpha must lie in [0, 1]");
    }
    if (descriptor.bins < 2) throw ConfigError("level '" + level_id + "': bins must be >= 2");
    if (descriptor.projections < 1) {
        throw ConfigError("level '" + level_id + "': projections must be >= 1");
    }
}

LevelConfig LevelConfig::defaults_for(std::string_view level_id) {
    LevelConfig cfg;
    cfg.level_id = std::string(level_id);
    if (level_id == "block3" || level_id == "block4") {
        cfg.descriptor.projections = 1000;
        cfg.descriptor.bins = 5;
        cfg.scorer = Scorer::knn;
    } else if (level_id == "raw_pixels") {
        cfg.descriptor.projections = 10;
        cfg.descriptor.bins = 5;
        cfg.scorer = Scorer::knn;
        cfg.whitening = false;
        cfg.weight = 0.1;
        cfg.repeats = 32;
        cfg.repeat_reduce = RepeatReduce::median;
    }
    return cfg;
}

void CropSchedule::validate() const {
    if (ratios.empty()) throw ConfigError("crop schedule needs at least one ratio");
    for (double r : ratios) {
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("crop ratios must lie in (0, 1]");
    }
    if (!(center_stride > 0.0 && center_stride <= 1.0)) {
        throw ConfigError("crop center stride must lie in (0, 1]");
    }
}

std::vector<std::pair<double, double>> CropSchedule::centers(double ratio) const {
    constexpr double eps = 1e-9;
    const double lo = ratio / 2.0;
    const double hi = 1.0 - ratio / 2.0;
    std::vector<double> axis;
    for (int i = 0; double(i) * center_stride <= hi + eps; ++i) {
        const double c = double(i) * center_stride;
        if (c >= lo - eps) axis.push_back(c);
    }
    std::vector<std::pair<double, double>> out;
    for (double y : axis) {
        for (double x : axis) out.emplace_back(x, y);
    }
    return out;
}

GroupKey GroupKey::from_keys(const GroupKeys& keys) {
    GroupKey key;
    key.level = "default";
    key.ratio = "1";
    for (const auto& [name, value] : keys) {
        if (name == "level") {
            key.level = value;
        } else if (name == "crop_ratio") {
            key.ratio = value;
        } else {
            if (!key.center.empty()) key.center += ';';
            key.center += name + "=" + value;
        }
    }
    return key;
}

std::string GroupKey::describe() const {
    return level + "/ratio=" + ratio + (center.empty() ? "" : "/" + center);
}

std::vector<Sample> load_samples(const DatasetManifest& manifest) {
    std::vector<Sample> samples;
    std::map<std::string, std::size_t> index;
    for (const auto& entry : manifest.entries) {
        auto [it, inserted] = index.emplace(entry.sample_id, samples.size());
        if (inserted) {
            Sample sample;
            sample.id = entry.sample_id;
            sample.label = entry.label;
            sample.label_name = entry.label_name;
            samples.push_back(std::move(sample));
        }
        auto& sample = samples[it->second];
        if (sample.label != entry.label) {
            throw DataError("sample '" + entry.sample_id + "' has conflicting labels");
        }
        const fs::path path = entry.path.is_absolute() ? entry.path : manifest.base_dir / entry.path;
        sample.sets[GroupKey::from_keys(entry.group_keys)] = read_element_set(path).elements;
    }
    return samples;
}

double GroupModel::score(const ElementMatrix& elements, Scorer scorer) const {
    return score(descriptor.describe(elements), scorer);
}

double GroupModel::score(const SetDescriptor& h, Scorer scorer) const {
    if (scorer == Scorer::maha) {
        return (mahalanobis_score(gaussian, h.values) - maha_norm.center) / maha_norm.scale;
    }
    return (knn_score(bank, gaussian, h.values) - knn_norm.center) / knn_norm.scale;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view level_id, int repeat) {
    // splitmix64 finalizer over the base seed mixed with the level name.
    std::uint64_t z = base ^ fnv1a64(level_id);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z + std::uint64_t(repeat);
}

namespace {

GroupModel fit_group(const GroupKey& key, std::span<const ElementMatrix> sets,
                     const LevelConfig& cfg, std::uint64_t seed) {
    DescriptorParams params = cfg.descriptor;
    params.seed = seed;
    auto fitted = fit_descriptor_model(sets, params);

    GroupModel group;
    group.key = key;
    group.seed = seed;
    group.descriptor = std::move(fitted.model);
    try {
        group.gaussian = fit_gaussian(fitted.training, cfg.alpha, cfg.whitening);
    } catch (const DegenerateModelError& e) {
        throw DegenerateModelError("group " + key.describe() + ": " + e.what());
    }
    // k is clamped to the training size so small groups still get a bank.
    group.bank = build_bank(group.gaussian, fitted.training,
                            std::min<Eigen::Index>(cfg.k, fitted.training.rows()));

    if (cfg.standardize) {
        std::vector<double> maha_scores;
        std::vector<double> knn_scores;
        for (Eigen::Index i = 0; i < fitted.training.rows(); ++i) {
            const Eigen::VectorXd h = fitted.training.row(i).transpose();
            maha_scores.push_back(mahalanobis_score(group.gaussian, h));
            knn_scores.push_back(knn_score(group.bank, group.gaussian, h, i));
        }
        auto to_norm = [](const std::vector<double>& scores) {
            const auto stats = mean_std(scores);
            return ScoreNorm{stats.mean, stats.std > 0.0 ? stats.std : 1.0};
        };
        group.maha_norm = to_norm(maha_scores);
        group.knn_norm = to_norm(knn_scores);
    }
    return group;
}

}  // namespace

Detector::Detector(std::uint64_t seed, std::vector<LevelModel> levels)
    : seed_(seed), levels_(std::move(levels)) {}

Detector fit_detector(std::span<const Sample> training, const std::vector<LevelConfig>& configs,
                      std::uint64_t seed) {
    if (training.size() < 2) {
        throw DataError("fitting needs at least 2 training samples");
    }
    for (const auto& sample : training) {
        if (sample.label != Label::normal) {
            throw DataError("leakage check: training sample '" + sample.id + "' is not normal");
        }
    }
    std::set<GroupKey> groups;
    for (const auto& [key, _] : training.front().sets) groups.insert(key);
    if (groups.empty()) throw DataError("training samples carry no element sets");
    for (const auto& sample : training) {
        for (const auto& key : groups) {
            if (!sample.sets.contains(key)) {
                throw DataError("missing group " + key.describe() + " in sample '" + sample.id + "'");
            }
        }
        if (sample.sets.size() != groups.size()) {
            throw DataError("sample '" + sample.id + "' has groups the first sample lacks");
        }
    }

    std::map<std::string, std::vector<GroupKey>> by_level;
    for (const auto& key : groups) by_level[key.level].push_back(key);

    std::vector<LevelModel> levels;
    for (const auto& [level_id, keys] : by_level) {
        LevelModel level;
        level.config = LevelConfig::defaults_for(level_id);
        for (const auto& cfg : configs) {
            if (cfg.level_id == level_id) level.config = cfg;
        }
        level.config.validate();

        for (int r = 0; r < level.config.repeats; ++r) {
            const std::uint64_t repeat_seed = derive_seed(seed, level_id, r);
            std::vector<GroupModel> models;
            for (const auto& key : keys) {
                std::vector<ElementMatrix> sets;
                sets.reserve(training.size());
                for (const auto& sample : training) sets.push_back(sample.sets.at(key));
                models.push_back(fit_group(key, sets, level.config, repeat_seed));
            }
            level.repeats.push_back(std::move(models));
        }
        levels.push_back(std::move(level));
    }
    double weight_sum = 0.0;
    for (const auto& level : levels) weight_sum += level.config.weight;
    if (!(weight_sum > 0.0)) {
        throw ConfigError("level weights sum to zero");
    }
    return Detector(seed, std::move(levels));
}

double combine_levels(std::span<const double> scores, std::span<const double> weights) {
    if (scores.size() != weights.size() || scores.empty()) {
        throw ConfigError("combine_levels: scores and weights differ in length");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        num += weights[i] * scores[i];
        den += weights[i];
    }
    if (!(den > 0.0)) throw ConfigError("level weights sum to zero");
    return num / den;
}

namespace {

// One level score per scorer, describing each group only once.
std::vector<double> score_level(const LevelModel& level, const Sample& sample,
                                std::span<const Scorer> scorers) {
    const std::size_t n_scorers = scorers.size();
    // per_repeat[scorer][repeat]
    std::vector<std::vector<double>> per_repeat(n_scorers);
    for (const auto& groups : level.repeats) {
        std::vector<std::map<std::string, std::vector<double>>> by_ratio(n_scorers);
        for (const auto& group : groups) {
            auto it = sample.sets.find(group.key);
            if (it == sample.sets.end()) {
                throw DataError("missing group " + group.key.describe() + " in sample '" + sample.id + "'");
            }
            const auto descriptor = group.descriptor.describe(it->second);
            for (std::size_t s = 0; s < n_scorers; ++s) {
                by_ratio[s][group.key.ratio].push_back(group.score(descriptor, scorers[s]));
            }
        }
        for (std::size_t s = 0; s < n_scorers; ++s) {
            std::vector<double> ratio_means;
            for (const auto& [ratio, values] : by_ratio[s]) ratio_means.push_back(mean_std(values).mean);
            per_repeat[s].push_back(mean_std(ratio_means).mean);
        }
    }
    std::vector<double> out(n_scorers);
    for (std::size_t s = 0; s < n_scorers; ++s) {
        out[s] = level.config.repeat_reduce == RepeatReduce::median ? median(per_repeat[s])
                                                                     : mean_std(per_repeat[s]).mean;
    }
    return out;
}

}  // namespace

SampleScore Detector::score(const Sample& sample, std::optional<Scorer> scorer) const {
    if (scorer) {
        const Scorer one[] = {*scorer};
        return score_with(sample, one).front();
    }
    // Each level uses its own configured scorer.
    SampleScore out;
    std::vector<double> level_scores;
    std::vector<double> weights;
    for (const auto& level : levels_) {
        const Scorer use[] = {level.config.scorer};
        const double s = score_level(level, sample, use).front();
        out.levels[level.config.level_id] = s;
        level_scores.push_back(s);
        weights.push_back(level.config.weight);
    }
    out.final = combine_levels(level_scores, weights);
    return out;
}

std::vector<SampleScore> Detector::score_with(const Sample& sample,
                                              std::span<const Scorer> scorers) const {
    std::vector<SampleScore> out(scorers.size());
    std::vector<std::vector<double>> level_scores(scorers.size());
    std::vector<double> weights;
    for (const auto& level : levels_) {
        const auto scores = score_level(level, sample, scorers);
        for (std::size_t s = 0; s < scorers.size(); ++s) {
            out[s].levels[level.config.level_id] = scores[s];
            level_scores[s].push_back(scores[s]);
        }
        weights.push_back(level.config.weight);
    }
    for (std::size_t s = 0; s < scorers.size(); ++s) {
        out[s].final = combine_levels(level_scores[s], weights);
    }
    return out;
}

SampleScore score_sample(const Detector& detector, const Sample& sample, std::optional<Scorer> scorer) {
    return detector.score(sample, scorer);
}

MeanStd run_repeats(const std::function<double(std::uint64_t)>& evaluate, int n,
                    std::uint64_t base_seed) {
    if (n < 1) throw ConfigError("run_repeats needs n >= 1");
    std::vector<double> metrics;
    for (int r = 0; r < n; ++r) metrics.push_back(evaluate(base_seed + std::uint64_t(r)));
    return mean_std(metrics);
}

// Persistence

namespace {

constexpr int kDetectorFormatVersion = 1;

json level_config_to_json(const LevelConfig& cfg) {
    return {
        {"level_id", cfg.level_id},
        {"projections", cfg.descriptor.projections},
        {"bins", cfg.descriptor.bins},
        {"projection_mode", to_string(cfg.descriptor.mode)},
        {"edge_mode", to_string(cfg.descriptor.edge_mode)},
        {"cumulative", cfg.descriptor.cumulative},
        {"scorer", to_string(cfg.scorer)},
        {"k", cfg.k},
        {"alpha", cfg.alpha},
        {"whitening", cfg.whitening},
        {"weight", cfg.weight},
        {"repeats", cfg.repeats},
        {"repeat_reduce", to_string(cfg.repeat_reduce)},
        {"standardize", cfg.standardize},
    };
}

LevelConfig level_config_from_json(const json& j) {
    LevelConfig cfg;
    cfg.level_id = j.at("level_id").get<std::string>();
    cfg.descriptor.projections = j.at("projections").get<Eigen::Index>();
    cfg.descriptor.bins = j.at("bins").get<Eigen::Index>();
    cfg.descriptor.mode = parse_projection_mode(j.at("projection_mode").get<std::string>());
    cfg.descriptor.edge_mode = parse_edge_mode(j.at("edge_mode").get<std::string>());
    cfg.descriptor.cumulative = j.at("cumulative").get<bool>();
    cfg.scorer = parse_scorer(j.at("scorer").get<std::string>());
    cfg.k = j.at("k").get<Eigen::Index>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.whitening = j.at("whitening").get<bool>();
    cfg.weight = j.at("weight").get<double>();
    cfg.repeats = j.at("repeats").get<int>();
    cfg.repeat_reduce = parse_repeat_reduce(j.at("repeat_reduce").get<std::string>());
    cfg.standardize = j.at("standardize").get<bool>();
    return cfg;
}

std::string group_stem(std::size_t g) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "group-%03zu", g);
    return buf;
}

fs::path repeat_dir(const fs::path& dir, const std::string& level, int r) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "repeat-%03d", r);
    return dir / level / buf;
}

}  // namespace

void Detector::save(const fs::path& dir) const {
    json doc;
    doc["format_version"] = kDetectorFormatVersion;
    doc["seed"] = seed_;
    doc["levels"] = json::array();
    for (const auto& level : levels_) {
        json lj;
        lj["config"] = level_config_to_json(level.config);
        lj["repeats"] = json::array();
        for (std::size_t r = 0; r < level.repeats.size(); ++r) {
            const auto rdir = repeat_dir(dir, level.config.level_id, int(r));
            json rj;
            rj["groups"] = json::array();
            const auto& groups = level.repeats[r];
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const auto& group = groups[g];
                const auto stem = group_stem(g);
                save_descriptor_model(group.descriptor, rdir, stem);
                save_gaussian_model(group.gaussian, rdir, stem);
                save_bank(group.bank, rdir / (stem + ".bank.sinb"));
                rj["groups"].push_back({
                    {"file_stem", stem},
                    {"level", group.key.level},
                    {"ratio", group.key.ratio},
                    {"center", group.key.center},
                    {"seed", group.seed},
                    {"k", group.bank.k},
                    {"maha_norm", {group.maha_norm.center, group.maha_norm.scale}},
                    {"knn_norm", {group.knn_norm.center, group.knn_norm.scale}},
                });
            }
            lj["repeats"].push_back(std::move(rj));
        }
        doc["levels"].push_back(std::move(lj));
    }
    atomic_write_text(dir / "detector.json", doc.dump(2) + "\n");
}

Detector Detector::load(const fs::path& dir) {
    const auto path = dir / "detector.json";
    if (!fs::exists(path)) {
        throw DataError("no detector.json in " + dir.string());
    }
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw DataError("malformed " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != kDetectorFormatVersion) {
            throw DataError("unsupported detector format_version");
        }
        std::vector<LevelModel> levels;
        for (const auto& lj : doc.at("levels")) {
            LevelModel level;
            level.config = level_config_from_json(lj.at("config"));
            level.config.validate();
            int r = 0;
            for (const auto& rj : lj.at("repeats")) {
                const auto rdir = repeat_dir(dir, level.config.level_id, r++);
                std::vector<GroupModel> groups;
                for (const auto& gj : rj.at("groups")) {
                    GroupModel group;
                    group.key = {gj.at("level").get<std::string>(), gj.at("ratio").get<std::string>(),
                                 gj.at("center").get<std::string>()};
                    const auto stem = gj.at("file_stem").get<std::string>();
                    const auto bank_path = rdir / (stem + ".bank.sinb");
                    if (!fs::exists(bank_path) || !fs::exists(rdir / (stem + ".model.bin"))) {
                        throw DataError("missing group " + group.key.describe() + " files in " +
                                        rdir.string());
                    }
                    group.seed = gj.at("seed").get<std::uint64_t>();
                    const auto maha_norm = gj.at("maha_norm").get<std::vector<double>>();
                    const auto knn_norm = gj.at("knn_norm").get<std::vector<double>>();
                    if (maha_norm.size() != 2 || knn_norm.size() != 2) {
                        throw DataError("malformed score normalization in " + path.string());
                    }
                    group.maha_norm = {maha_norm[0], maha_norm[1]};
                    group.knn_norm = {knn_norm[0], knn_norm[1]};
                    group.descriptor = load_descriptor_model(rdir, stem);
                    group.gaussian = load_gaussian_model(rdir, stem);
                    group.bank = load_bank(bank_path, gj.at("k").get<Eigen::Index>());
                    groups.push_back(std::move(group));
                }
                level.repeats.push_back(std::move(groups));
            }
            if (int(level.repeats.size()) != level.config.repeats) {
                throw DataError("detector level '" + level.config.level_id + "' has " +
                                std::to_string(level.repeats.size()) + " repeats, config says " +
                                std::to_string(level.config.repeats));
            }
            levels.push_back(std::move(level));
        }
        return Detector(doc.at("seed").get<std::uint64_t>(), std::move(levels));
    } catch (const json::exception& e) {
        throw DataError("malformed " + path.string() + ": " + e.what());
    }
}

}  // namespace sinbad
