#include "sinbad/evaluation.hpp"

#include "sinbad/error.hpp"
#include "sinbad/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace sinbad {

using nlohmann::json;

namespace {

constexpr int kHistogramBins = 20;

const char* to_string(Protocol p) { return p == Protocol::uea ? "uea" : "manifest"; }

Scorer other(Scorer s) { return s == Scorer::maha ? Scorer::knn : Scorer::maha; }

// Typed field access that reports the offending key.
template <typename T>
T get_as(const json& j, std::string_view key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
    }
}

Eigen::Index get_index(const json& j, std::string_view key) {
    if (!j.is_number_integer()) {
        throw ConfigError("config key '" + std::string(key) + "' must be an integer");
    }
    return Eigen::Index(j.get<std::int64_t>());
}

// Parses the tuning keys of `obj` into `out`; returns the keys it consumed.
std::set<std::string> parse_tuning(const json& obj, TuningOverrides& out) {
    std::set<std::string> used;
    auto take = [&](const char* key) -> const json* {
        auto it = obj.find(key);
        if (it == obj.end()) return nullptr;
        used.insert(key);
        return &*it;
    };
    try {
        if (auto* v = take("projections")) out.projections = get_index(*v, "projections");
        if (auto* v = take("bins")) out.bins = get_index(*v, "bins");
        if (auto* v = take("projection_mode")) {
            out.projection_mode = parse_projection_mode(get_as<std::string>(*v, "projection_mode"));
        }
        if (auto* v = take("edge_mode")) out.edge_mode = parse_edge_mode(get_as<std::string>(*v, "edge_mode"));
        if (auto* v = take("cumulative")) out.cumulative = get_as<bool>(*v, "cumulative");
        if (auto* v = take("scorer")) out.scorer = parse_scorer(get_as<std::string>(*v, "scorer"));
        if (auto* v = take("k")) out.k = get_index(*v, "k");
        if (auto* v = take("alpha")) out.alpha = get_as<double>(*v, "alpha");
        if (auto* v = take("whiten")) out.whitening = get_as<bool>(*v, "whiten");
        if (auto* v = take("weight")) out.weight = get_as<double>(*v, "weight");
        if (auto* v = take("level_repeats")) out.repeats = int(get_index(*v, "level_repeats"));
        if (auto* v = take("repeat_reduce")) {
            out.repeat_reduce = parse_repeat_reduce(get_as<std::string>(*v, "repeat_reduce"));
        }
        if (auto* v = take("standardize")) out.standardize = get_as<bool>(*v, "standardize");
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return used;
}

json tuning_json(const TuningOverrides& t) {
    json j = json::object();
    if (t.projections) j["projections"] = *t.projections;
    if (t.bins) j["bins"] = *t.bins;
    if (t.projection_mode) j["projection_mode"] = to_string(*t.projection_mode);
    if (t.edge_mode) j["edge_mode"] = to_string(*t.edge_mode);
    if (t.cumulative) j["cumulative"] = *t.cumulative;
    if (t.scorer) j["scorer"] = to_string(*t.scorer);
    if (t.k) j["k"] = *t.k;
    if (t.alpha) j["alpha"] = *t.alpha;
    if (t.whitening) j["whiten"] = *t.whitening;
    if (t.weight) j["weight"] = *t.weight;
    if (t.repeats) j["level_repeats"] = *t.repeats;
    if (t.repeat_reduce) j["repeat_reduce"] = to_string(*t.repeat_reduce);
    if (t.standardize) j["standardize"] = *t.standardize;
    return j;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<ScoredSample> scored(const std::vector<ScoreRecord>& records, bool alt) {
    std::vector<ScoredSample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({alt ? r.score_alt : r.score, r.anomalous});
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.empty() || p.is_absolute() ? p : base / p;
}

std::vector<TimeSeries> load_series(const std::filesystem::path& path, const DatasetConfig& ds) {
    auto series = parse_uea_ts(path).series;
    if (ds.min_length || ds.max_length) {
        series = filter_by_length(std::move(series), ds.min_length.value_or(0),
                                  ds.max_length.value_or(std::numeric_limits<Eigen::Index>::max()));
    }
    return series;
}

}  // namespace

void TuningOverrides::apply(LevelConfig& cfg) const {
    if (projections) cfg.descriptor.projections = *projections;
    if (bins) cfg.descriptor.bins = *bins;
    if (projection_mode) cfg.descriptor.mode = *projection_mode;
    if (edge_mode) cfg.descriptor.edge_mode = *edge_mode;
    if (cumulative) cfg.descriptor.cumulative = *cumulative;
    if (scorer) cfg.scorer = *scorer;
    if (k) cfg.k = *k;
    if (alpha) cfg.alpha = *alpha;
    if (whitening) cfg.whitening = *whitening;
    if (weight) cfg.weight = *weight;
    if (repeats) cfg.repeats = *repeats;
    if (repeat_reduce) cfg.repeat_reduce = *repeat_reduce;
    if (standardize) cfg.standardize = *standardize;
}

LevelConfig EvalConfig::resolve_level(std::string_view level_id) const {
    auto cfg = LevelConfig::defaults_for(level_id);
    tuning.apply(cfg);
    if (auto it = level_tuning.find(std::string(level_id)); it != level_tuning.end()) {
        it->second.apply(cfg);
    }
    return cfg;
}

void EvalConfig::validate() const {
    pyramid.validate();
    if (repeats < 1) throw ConfigError("repeats must be at least 1");
    if (dataset.train.empty() || dataset.test.empty()) {
        throw ConfigError("dataset needs both 'train' and 'test' paths");
    }
    if (dataset.min_length && dataset.max_length && *dataset.min_length > *dataset.max_length) {
        throw ConfigError("dataset min_length exceeds max_length");
    }
    resolve_level(kTimeSeriesLevel).validate();
    for (const auto& [id, _] : level_tuning) resolve_level(id).validate();
}

std::string EvalConfig::canonical_json() const {
    json ds = json::object();
    ds["kind"] = to_string(dataset.protocol);
    ds["name"] = dataset.name;
    ds["train"] = dataset.train.generic_string();
    ds["test"] = dataset.test.generic_string();
    json labels = json::object();
    for (const auto& [name, label] : dataset.labels) labels[name] = to_string(label);
    ds["label_map"] = labels;
    if (dataset.min_length) ds["min_length"] = *dataset.min_length;
    if (dataset.max_length) ds["max_length"] = *dataset.max_length;

    json j = tuning_json(tuning);
    j["dataset"] = ds;
    j["tau"] = pyramid.window;
    j["levels"] = pyramid.levels;
    j["repeats"] = repeats;
    j["seed"] = seed;
    j["output_dir"] = output_dir.generic_string();
    json per_level = json::object();
    for (const auto& [id, t] : level_tuning) per_level[id] = tuning_json(t);
    j["level_overrides"] = per_level;
    // nlohmann objects are key-sorted, so dump() is canonical.
    return j.dump();
}

std::string EvalConfig::fingerprint() const { return hex64(fnv1a64(canonical_json())); }

EvalConfig parse_eval_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    EvalConfig cfg;
    auto used = parse_tuning(j, cfg.tuning);
    auto take = [&](const char* key) -> const json* {
        auto it = j.find(key);
        if (it == j.end()) return nullptr;
        used.insert(key);
        return &*it;
    };
    if (auto* v = take("tau")) cfg.pyramid.window = int(get_index(*v, "tau"));
    if (auto* v = take("levels")) cfg.pyramid.levels = int(get_index(*v, "levels"));
    if (auto* v = take("repeats")) cfg.repeats = int(get_index(*v, "repeats"));
    if (auto* v = take("seed")) {
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            throw ConfigError("config key 'seed' must be a non-negative integer");
        }
        cfg.seed = v->get<std::uint64_t>();
    }
    if (auto* v = take("output_dir")) {
        cfg.output_dir = resolve(get_as<std::string>(*v, "output_dir"), base_dir);
    }
    if (auto* v = take("level_overrides")) {
        if (!v->is_object()) throw ConfigError("'level_overrides' must be an object");
        for (const auto& [id, body] : v->items()) {
            if (!body.is_object()) throw ConfigError("level override '" + id + "' must be an object");
            TuningOverrides t;
            const auto level_used = parse_tuning(body, t);
            for (const auto& [key, _] : body.items()) {
                if (!level_used.contains(key)) {
                    throw ConfigError("unknown key '" + key + "' in level override '" + id + "'");
                }
            }
            cfg.level_tuning[id] = t;
        }
    }
    if (auto* v = take("dataset")) {
        if (!v->is_object()) throw ConfigError("'dataset' must be an object");
        const std::set<std::string> known{"kind", "name", "train", "test", "label_map",
                                          "min_length", "max_length"};
        for (const auto& [key, _] : v->items()) {
            if (!known.contains(key)) throw ConfigError("unknown dataset key '" + key + "'");
        }
        auto& ds = cfg.dataset;
        const std::string kind = get_as<std::string>(v->value("kind", json("uea")), "kind");
        if (kind == "uea") {
            ds.protocol = Protocol::uea;
        } else if (kind == "manifest") {
            ds.protocol = Protocol::manifest;
        } else {
            throw ConfigError("dataset kind must be 'uea' or 'manifest', got '" + kind + "'");
        }
        if (v->contains("name")) ds.name = get_as<std::string>(v->at("name"), "name");
        if (v->contains("train")) ds.train = resolve(get_as<std::string>(v->at("train"), "train"), base_dir);
        if (v->contains("test")) ds.test = resolve(get_as<std::string>(v->at("test"), "test"), base_dir);
        if (v->contains("label_map")) {
            const auto& lm = v->at("label_map");
            if (!lm.is_object()) throw ConfigError("'label_map' must be an object");
            for (const auto& [name, target] : lm.items()) {
                const auto t = get_as<std::string>(target, "label_map");
                if (t == "normal") {
                    ds.labels[name] = Label::normal;
                } else if (t == "anomalous") {
                    ds.labels[name] = Label::anomalous;
                } else {
                    throw ConfigError("label_map values must be 'normal' or 'anomalous'");
                }
            }
        }
        if (v->contains("min_length")) ds.min_length = get_index(v->at("min_length"), "min_length");
        if (v->contains("max_length")) ds.max_length = get_index(v->at("max_length"), "max_length");
        if (ds.name.empty()) {
            ds.name = ds.train.stem().string();
            if (ds.name.ends_with("_TRAIN")) ds.name.resize(ds.name.size() - 6);
        }
    }
    for (const auto& [key, _] : j.items()) {
        if (!used.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    return cfg;
}

EvalConfig load_eval_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse_eval_config(text, path.parent_path());
}

std::vector<Sample> pyramid_samples(const std::vector<TimeSeries>& series,
                                    const PyramidConfig& pyramid) {
    const auto key = GroupKey::from_keys({{"level", kTimeSeriesLevel}});
    std::vector<Sample> out;
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        Sample s;
        s.id = series[i].series_id.empty() ? std::to_string(i) : series[i].series_id;
        s.label_name = series[i].label;
        s.sets.emplace(key, extract_pyramid_elements(series[i], pyramid).elements);
        out.push_back(std::move(s));
    }
    return out;
}

OneVsRestResult one_vs_rest(const std::vector<Sample>& train, const std::vector<Sample>& test,
                            const LevelConfig& level, std::uint64_t seed, int repeat_index) {
    std::set<std::string> classes;
    for (const auto& s : train) classes.insert(s.label_name);
    if (classes.size() < 2) throw DataError("one-vs-rest needs at least 2 training classes");

    const Scorer scorers[] = {level.scorer, other(level.scorer)};
    OneVsRestResult out;
    for (const auto& cls : classes) {
        std::vector<Sample> normal;
        for (const auto& s : train) {
            if (s.label_name != cls) continue;
            normal.push_back(s);
            normal.back().label = Label::normal;
        }
        const auto detector = fit_detector(normal, {level}, seed);

        std::vector<ScoreRecord> records;
        records.reserve(test.size());
        for (const auto& s : test) {
            const auto both = detector.score_with(s, scorers);
            records.push_back({repeat_index, cls, s.id, s.label_name, s.label_name != cls,
                               both[0].final, both[1].final});
        }
        ClassResult result;
        result.name = cls;
        result.n_train = normal.size();
        result.n_test = records.size();
        try {
            result.auc.push_back(roc_auc(scored(records, false)));
            result.auc_alt.push_back(roc_auc(scored(records, true)));
        } catch (const DataError& e) {
            throw DataError("class '" + cls + "': " + e.what());
        }
        out.mean_auc += result.auc.back();
        out.mean_auc_alt += result.auc_alt.back();
        out.classes.push_back(std::move(result));
        out.scores.insert(out.scores.end(), records.begin(), records.end());
    }
    out.mean_auc /= double(out.classes.size());
    out.mean_auc_alt /= double(out.classes.size());
    return out;
}

namespace {

void merge_classes(std::vector<ClassResult>& into, std::vector<ClassResult>&& from) {
    for (auto& c : from) {
        auto it = std::find_if(into.begin(), into.end(),
                               [&](const ClassResult& x) { return x.name == c.name; });
        if (it == into.end()) {
            into.push_back(std::move(c));
        } else {
            it->auc.insert(it->auc.end(), c.auc.begin(), c.auc.end());
            it->auc_alt.insert(it->auc_alt.end(), c.auc_alt.begin(), c.auc_alt.end());
        }
    }
}

void evaluate_uea(const EvalConfig& config, EvalReport& report) {
    const auto& ds = config.dataset;
    const auto train = pyramid_samples(load_series(ds.train, ds), config.pyramid);
    const auto test = pyramid_samples(load_series(ds.test, ds), config.pyramid);
    if (train.empty() || test.empty()) throw DataError("no series left after the length filter");

    const auto level = config.resolve_level(kTimeSeriesLevel);
    report.scorer = to_string(level.scorer);
    report.alt_scorer = to_string(other(level.scorer));
    for (int r = 0; r < config.repeats; ++r) {
        auto result = one_vs_rest(train, test, level, config.seed + std::uint64_t(r), r);
        report.repeat_auc.push_back(result.mean_auc);
        report.repeat_auc_alt.push_back(result.mean_auc_alt);
        merge_classes(report.classes, std::move(result.classes));
        report.scores.insert(report.scores.end(), result.scores.begin(), result.scores.end());
    }
}

void evaluate_manifest(const EvalConfig& config, EvalReport& report) {
    const auto& ds = config.dataset;
    const auto train_manifest = load_manifest(ds.train, ds.labels);
    const auto test_manifest = load_manifest(ds.test, ds.labels);
    if (train_manifest.split != Split::train) {
        throw DataError("leakage check: training manifest is tagged '" +
                        std::string(to_string(train_manifest.split)) + "'");
    }
    if (test_manifest.split == Split::train) {
        throw DataError("leakage check: test manifest is tagged 'train'");
    }
    const auto train = load_samples(train_manifest);
    const auto test = load_samples(test_manifest);
    {
        std::set<std::string> train_ids;
        for (const auto& s : train) train_ids.insert(s.id);
        for (const auto& s : test) {
            if (train_ids.contains(s.id)) {
                throw DataError("leakage check: sample '" + s.id + "' is in both train and test");
            }
            if (s.label == Label::unknown) {
                throw DataError("test sample '" + s.id + "' has no normal/anomalous label");
            }
        }
    }
    if (train.empty() || test.empty()) throw DataError("empty train or test manifest");

    std::vector<LevelConfig> configs;
    std::set<Scorer> level_scorers;
    for (const auto& [key, _] : train.front().sets) {
        if (!configs.empty() && configs.back().level_id == key.level) continue;
        configs.push_back(config.resolve_level(key.level));
        level_scorers.insert(configs.back().scorer);
    }
    // A single shared scorer gets the other one as the alternative; mixed
    // per-level scorers are reported as configured only.
    const bool has_alt = level_scorers.size() == 1;
    report.scorer = has_alt ? to_string(*level_scorers.begin()) : "configured";
    if (has_alt) report.alt_scorer = to_string(other(*level_scorers.begin()));

    std::set<std::string> subtypes;
    for (const auto& s : test) {
        if (s.label == Label::anomalous) subtypes.insert(s.label_name);
    }

    for (int r = 0; r < config.repeats; ++r) {
        const auto detector = fit_detector(train, configs, config.seed + std::uint64_t(r));
        std::vector<ScoreRecord> records;
        for (const auto& s : test) {
            ScoreRecord rec{r, "all", s.id, s.label_name, s.label == Label::anomalous, 0.0, 0.0};
            if (has_alt) {
                const Scorer use[] = {*level_scorers.begin(), other(*level_scorers.begin())};
                const auto both = detector.score_with(s, use);
                rec.score = both[0].final;
                rec.score_alt = both[1].final;
            } else {
                rec.score = detector.score(s).final;
            }
            records.push_back(std::move(rec));
        }

        std::vector<ClassResult> classes;
        auto add = [&](const std::string& name, const std::vector<ScoreRecord>& subset) {
            ClassResult c;
            c.name = name;
            c.n_train = train.size();
            c.n_test = subset.size();
            c.auc.push_back(roc_auc(scored(subset, false)));
            if (has_alt) c.auc_alt.push_back(roc_auc(scored(subset, true)));
            classes.push_back(std::move(c));
        };
        add("all", records);
        for (const auto& subtype : subtypes) {
            std::vector<ScoreRecord> subset;
            for (const auto& rec : records) {
                if (!rec.anomalous || rec.label_name == subtype) subset.push_back(rec);
            }
            add(subtype, subset);
        }
        report.repeat_auc.push_back(classes.front().auc.front());
        if (has_alt) report.repeat_auc_alt.push_back(classes.front().auc_alt.front());
        merge_classes(report.classes, std::move(classes));
        report.scores.insert(report.scores.end(), records.begin(), records.end());
    }
}

}  // namespace

EvalReport evaluate_dataset(const EvalConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    EvalReport report;
    report.dataset = config.dataset.name;
    report.protocol = to_string(config.dataset.protocol);
    report.config_json = config.canonical_json();
    report.fingerprint = config.fingerprint();

    if (config.dataset.protocol == Protocol::uea) {
        evaluate_uea(config, report);
    } else {
        evaluate_manifest(config, report);
    }
    report.auc = mean_std(report.repeat_auc);
    report.auc_alt = mean_std(report.repeat_auc_alt);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!config.output_dir.empty()) write_report_files(report, config.output_dir);
    return report;
}

std::string EvalReport::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["dataset"] = dataset;
    j["protocol"] = protocol;
    j["scorer"] = scorer;
    j["alt_scorer"] = alt_scorer;
    j["fingerprint"] = fingerprint;
    j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    json cls = json::array();
    for (const auto& c : classes) {
        const auto a = mean_std(c.auc);
        json e{{"name", c.name},       {"n_train", c.n_train}, {"n_test", c.n_test},
               {"auc", c.auc},         {"auc_mean", a.mean},   {"auc_std", a.std}};
        if (!c.auc_alt.empty()) {
            const auto b = mean_std(c.auc_alt);
            e["auc_alt"] = c.auc_alt;
            e["auc_alt_mean"] = b.mean;
            e["auc_alt_std"] = b.std;
        }
        cls.push_back(std::move(e));
    }
    j["classes"] = std::move(cls);
    j["repeat_auc"] = repeat_auc;
    j["auc"] = {{"mean", auc.mean}, {"std", auc.std}};
    if (!repeat_auc_alt.empty()) {
        j["repeat_auc_alt"] = repeat_auc_alt;
        j["auc_alt"] = {{"mean", auc_alt.mean}, {"std", auc_alt.std}};
    }
    j["runtime_seconds"] = runtime_seconds;
    j["scores_path"] = scores_path.generic_string();
    return j.dump(2) + "\n";
}

void write_report_files(EvalReport& report, const std::filesystem::path& dir) {
    report.report_path = dir / "report.json";
    report.scores_path = dir / "scores.csv";

    atomic_write(report.scores_path, [&](std::ostream& os) {
        os << "repeat,group,sample_id,label,anomalous,score,score_alt\n";
        for (const auto& r : report.scores) {
            os << r.repeat << ',' << csv_field(r.group) << ',' << csv_field(r.sample_id) << ','
               << csv_field(r.label_name) << ',' << (r.anomalous ? 1 : 0) << ','
               << format_double(r.score) << ',' << format_double(r.score_alt) << '\n';
        }
    });

    // Partition records by (repeat, group) for the per-curve outputs.
    std::map<std::pair<int, std::string>, std::vector<ScoreRecord>> parts;
    for (const auto& r : report.scores) parts[{r.repeat, r.group}].push_back(r);

    atomic_write(dir / "roc.csv", [&](std::ostream& os) {
        os << "repeat,group,threshold,fpr,tpr\n";
        for (const auto& [key, records] : parts) {
            const auto samples = scored(records, false);
            const bool both = std::any_of(samples.begin(), samples.end(), [](auto& s) { return s.anomalous; }) &&
                              std::any_of(samples.begin(), samples.end(), [](auto& s) { return !s.anomalous; });
            if (!both) continue;
            for (const auto& p : roc_curve(samples)) {
                os << key.first << ',' << csv_field(key.second) << ',' << format_double(p.threshold) << ','
                   << format_double(p.false_positive_rate) << ',' << format_double(p.true_positive_rate)
                   << '\n';
            }
        }
    });

    atomic_write(dir / "score_histogram.csv", [&](std::ostream& os) {
        os << "repeat,group,anomalous,bin_low,bin_high,count\n";
        for (const auto& [key, records] : parts) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto& r : records) {
                lo = std::min(lo, r.score);
                hi = std::max(hi, r.score);
            }
            const double width = hi > lo ? (hi - lo) / kHistogramBins : 1.0;
            for (int anomalous = 0; anomalous < 2; ++anomalous) {
                std::vector<std::size_t> counts(kHistogramBins, 0);
                for (const auto& r : records) {
                    if (r.anomalous != bool(anomalous)) continue;
                    const int bin = std::clamp(int((r.score - lo) / width), 0, kHistogramBins - 1);
                    ++counts[std::size_t(bin)];
                }
                for (int b = 0; b < kHistogramBins; ++b) {
                    os << key.first << ',' << csv_field(key.second) << ',' << anomalous << ','
                       << format_double(lo + b * width) << ',' << format_double(lo + (b + 1) * width)
                       << ',' << counts[std::size_t(b)] << '\n';
                }
            }
        }
    });

    atomic_write_text(report.report_path, report.to_json());
}

}  // namespace sinbad
