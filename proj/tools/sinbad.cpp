// sinbad: fit, score and evaluate set-feature anomaly detectors.

#include "sinbad/detector.hpp"
#include "sinbad/error.hpp"
#include "sinbad/evaluation.hpp"
#include "sinbad/io.hpp"
#include "sinbad/uea.hpp"
#include "sinbad/window_pyramid.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace {

using namespace sinbad;

struct TuningFlags {
    std::optional<Eigen::Index> bins;
    std::optional<Eigen::Index> projections;
    std::optional<std::string> projection_mode;
    std::optional<std::string> scorer;
    std::optional<Eigen::Index> k;
    std::optional<double> alpha;
    bool no_whiten = false;
    std::optional<std::string> edge_mode;
    std::optional<int> tau;
    std::optional<int> levels;
    std::optional<std::uint64_t> seed;
    std::optional<int> repeats;
    std::string config;

    void add_to(CLI::App& cmd, bool with_pyramid) {
        cmd.add_option("--config", config, "JSON config; flags given here override it");
        cmd.add_option("--bins", bins, "histogram bins per projection");
        cmd.add_option("--projections", projections, "number of projections");
        cmd.add_option("--projection-mode", projection_mode, "gaussian, identity or pca")
            ->check(CLI::IsMember({"gaussian", "identity", "pca"}));
        cmd.add_option("--scorer", scorer, "maha or knn")->check(CLI::IsMember({"maha", "knn"}));
        cmd.add_option("--k", k, "neighbours for the knn scorer");
        cmd.add_option("--alpha", alpha, "covariance shrinkage in [0, 1]");
        cmd.add_flag("--no-whiten", no_whiten, "score with an identity covariance");
        cmd.add_option("--edge-mode", edge_mode, "width or quantile")
            ->check(CLI::IsMember({"width", "quantile"}));
        if (with_pyramid) {
            cmd.add_option("--tau", tau, "window length (even)");
            cmd.add_option("--levels", levels, "window pyramid levels");
        }
        cmd.add_option("--seed", seed, "base random seed");
        cmd.add_option("--repeats", repeats, "independent repeats");
    }

    EvalConfig resolve() const {
        EvalConfig cfg = config.empty() ? EvalConfig{} : load_eval_config(config);
        auto& t = cfg.tuning;
        if (bins) t.bins = *bins;
        if (projections) t.projections = *projections;
        if (projection_mode) t.projection_mode = parse_projection_mode(*projection_mode);
        if (scorer) t.scorer = parse_scorer(*scorer);
        if (k) t.k = *k;
        if (alpha) t.alpha = *alpha;
        if (no_whiten) t.whitening = false;
        if (edge_mode) t.edge_mode = parse_edge_mode(*edge_mode);
        if (tau) cfg.pyramid.window = *tau;
        if (levels) cfg.pyramid.levels = *levels;
        if (seed) cfg.seed = *seed;
        if (repeats) cfg.repeats = *repeats;
        return cfg;
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

LabelMap parse_label_pairs(const std::vector<std::string>& pairs) {
    LabelMap map;
    for (const auto& p : pairs) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw ConfigError("--label expects name=normal|anomalous, got '" + p + "'");
        const auto target = p.substr(eq + 1);
        if (target == "normal") {
            map[p.substr(0, eq)] = Label::normal;
        } else if (target == "anomalous") {
            map[p.substr(0, eq)] = Label::anomalous;
        } else {
            throw ConfigError("--label target must be normal or anomalous, got '" + target + "'");
        }
    }
    return map;
}

int run_fit(const TuningFlags& flags, const std::string& train_path, const std::string& out_dir,
            const std::vector<std::string>& label_pairs) {
    auto cfg = flags.resolve();
    // For a single detector, --repeats means repeats per level.
    if (cfg.repeats != 1 && !cfg.tuning.repeats) cfg.tuning.repeats = cfg.repeats;

    const auto manifest = load_manifest(train_path, parse_label_pairs(label_pairs));
    if (manifest.split != Split::train) {
        throw DataError("leakage check: '" + train_path + "' is not a training manifest");
    }
    const auto samples = load_samples(manifest);
    if (samples.empty()) throw DataError("training manifest has no entries");

    std::vector<LevelConfig> configs;
    std::set<std::string> seen;
    for (const auto& [key, _] : samples.front().sets) {
        if (seen.insert(key.level).second) configs.push_back(cfg.resolve_level(key.level));
    }
    const auto detector = fit_detector(samples, configs, cfg.seed);
    detector.save(out_dir);
    std::size_t groups = 0;
    for (const auto& level : detector.levels()) groups += level.repeats.front().size();
    std::cout << "fitted " << detector.levels().size() << " level(s), " << groups
              << " group(s) on " << samples.size() << " samples -> " << out_dir << "\n";
    return 0;
}

int run_score(const TuningFlags& flags, const std::string& detector_dir, const std::string& test_path,
              const std::string& out_path, const std::vector<std::string>& label_pairs) {
    const auto detector = Detector::load(detector_dir);
    const auto manifest = load_manifest(test_path, parse_label_pairs(label_pairs));
    if (manifest.split == Split::train) {
        throw DataError("leakage check: refusing to score a training manifest");
    }
    const auto samples = load_samples(manifest);
    std::optional<Scorer> scorer;
    if (flags.scorer) scorer = parse_scorer(*flags.scorer);

    std::vector<std::string> level_ids;
    for (const auto& level : detector.levels()) level_ids.push_back(level.config.level_id);

    std::ostringstream csv;
    csv << "sample_id,label,label_name,score";
    for (const auto& id : level_ids) csv << ",score_" << id;
    csv << "\n";
    std::vector<ScoredSample> labelled;
    for (const auto& s : samples) {
        const auto result = detector.score(s, scorer);
        csv << s.id << ',' << to_string(s.label) << ',' << s.label_name << ',' << fmt(result.final);
        for (const auto& id : level_ids) csv << ',' << fmt(result.levels.at(id));
        csv << "\n";
        if (s.label != Label::unknown) labelled.push_back({result.final, s.label == Label::anomalous});
    }
    if (out_path.empty() || out_path == "-") {
        std::cout << csv.str();
    } else {
        atomic_write_text(out_path, csv.str());
    }

    const bool has_normal = std::any_of(labelled.begin(), labelled.end(), [](auto& s) { return !s.anomalous; });
    const bool has_anomalous = std::any_of(labelled.begin(), labelled.end(), [](auto& s) { return s.anomalous; });
    if (has_normal && has_anomalous) {
        std::cerr << "roc_auc " << std::fixed << std::setprecision(4) << roc_auc(labelled) << "\n";
    }
    return 0;
}

int run_eval(const TuningFlags& flags, const std::string& out_dir) {
    auto cfg = flags.resolve();
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const auto report = evaluate_dataset(cfg);

    std::cout << "dataset " << report.dataset << " (" << report.protocol << "), fingerprint "
              << report.fingerprint << "\n";
    std::cout << std::fixed << std::setprecision(4);
    for (const auto& c : report.classes) {
        const auto a = mean_std(c.auc);
        std::cout << "  " << std::left << std::setw(24) << c.name << " auc " << a.mean;
        if (!c.auc_alt.empty()) std::cout << "  " << report.alt_scorer << " " << mean_std(c.auc_alt).mean;
        std::cout << "\n";
    }
    std::cout << "auc (" << report.scorer << ") " << report.auc.mean << " +- " << report.auc.std << "\n";
    if (!report.alt_scorer.empty()) {
        std::cout << "auc (" << report.alt_scorer << ") " << report.auc_alt.mean << " +- "
                  << report.auc_alt.std << "\n";
    }
    std::cout << "runtime " << std::setprecision(1) << report.runtime_seconds << " s\n";
    if (!report.report_path.empty()) std::cout << "report " << report.report_path.string() << "\n";
    return 0;
}

int run_extract_ts(const TuningFlags& flags, const std::string& input, const std::string& out_dir,
                   const std::string& split_name, const std::string& normal_class) {
    const auto cfg = flags.resolve();
    cfg.pyramid.validate();
    const Split split = parse_split(split_name);
    const auto dataset = parse_uea_ts(std::filesystem::path(input));

    DatasetManifest manifest;
    manifest.split = split;
    const std::filesystem::path dir(out_dir);
    std::size_t written = 0;
    for (std::size_t i = 0; i < dataset.series.size(); ++i) {
        const auto& ts = dataset.series[i];
        if (split == Split::train && !normal_class.empty() && ts.label != normal_class) continue;

        ManifestEntry entry;
        entry.sample_id = ts.series_id.empty() ? std::to_string(i) : ts.series_id;
        // Class names are not portable labels; write the canonical ones.
        if (split == Split::train) {
            entry.label = Label::normal;
        } else if (!normal_class.empty()) {
            entry.label = ts.label == normal_class ? Label::normal : Label::anomalous;
        }
        entry.label_name = to_string(entry.label);
        entry.group_keys = {{"level", kTimeSeriesLevel}};
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.sinb", i);
        entry.path = std::filesystem::path("elements") / name;
        write_element_set(extract_pyramid_elements(ts, cfg.pyramid), dir / entry.path);
        manifest.entries.push_back(std::move(entry));
        ++written;
    }
    save_manifest(manifest, dir / "manifest.json");
    std::cout << "wrote " << written << " element sets to " << out_dir << "\n";
    return 0;
}

int run_parse_uea(const std::string& input) {
    const auto dataset = parse_uea_ts(std::filesystem::path(input));
    Eigen::Index min_len = std::numeric_limits<Eigen::Index>::max();
    Eigen::Index max_len = 0;
    Eigen::Index channels = 0;
    for (const auto& s : dataset.series) {
        min_len = std::min(min_len, s.length());
        max_len = std::max(max_len, s.length());
        channels = s.channels();
    }
    nlohmann::json j;
    j["problem_name"] = dataset.header.problem_name;
    j["series"] = dataset.series.size();
    j["channels"] = channels;
    j["min_length"] = dataset.series.empty() ? 0 : min_len;
    j["max_length"] = max_len;
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& s : dataset.series) {
        classes[s.label] = classes.value(s.label, 0) + 1;
    }
    j["classes"] = classes;
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Set-feature anomaly detection"};
    app.require_subcommand(1);

    TuningFlags fit_flags, score_flags, eval_flags, extract_flags;
    std::string train_path, test_path, detector_dir, out_path, out_dir, input, split = "test", normal_class;
    std::vector<std::string> labels;

    auto* fit = app.add_subcommand("fit", "fit a detector on a training manifest");
    fit->add_option("--train", train_path, "training manifest.json")->required();
    fit->add_option("--out", out_dir, "detector directory")->required();
    fit->add_option("--label", labels, "label mapping name=normal|anomalous");
    fit_flags.add_to(*fit, false);

    auto* score = app.add_subcommand("score", "score a manifest with a saved detector");
    score->add_option("--detector", detector_dir, "detector directory")->required();
    score->add_option("--test", test_path, "test manifest.json")->required();
    score->add_option("--out", out_path, "scores CSV (default stdout)");
    score->add_option("--label", labels, "label mapping name=normal|anomalous");
    score->add_option("--scorer", score_flags.scorer, "override every level's scorer")
        ->check(CLI::IsMember({"maha", "knn"}));

    auto* eval = app.add_subcommand("eval", "run the evaluation protocol of a config file");
    eval->add_option("--out", out_dir, "report directory (overrides output_dir)");
    eval_flags.add_to(*eval, true);

    auto* extract = app.add_subcommand("extract-ts", "convert a .ts file into element-set containers");
    extract->add_option("--input", input, ".ts file")->required();
    extract->add_option("--out", out_dir, "output directory")->required();
    extract->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test", "validation"}));
    extract->add_option("--normal-class", normal_class,
                        "class treated as normal; train keeps only it, test is labelled against it");
    extract->add_option("--tau", extract_flags.tau, "window length (even)");
    extract->add_option("--levels", extract_flags.levels, "window pyramid levels");
    extract->add_option("--config", extract_flags.config, "JSON config supplying tau/levels");

    auto* parse = app.add_subcommand("parse-uea", "validate a .ts file and print a summary");
    parse->add_option("input", input, ".ts file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorKind::config);
    }

    try {
        if (*fit) return run_fit(fit_flags, train_path, out_dir, labels);
        if (*score) return run_score(score_flags, detector_dir, test_path, out_path, labels);
        if (*eval) return run_eval(eval_flags, out_dir);
        if (*extract) return run_extract_ts(extract_flags, input, out_dir, split, normal_class);
        if (*parse) return run_parse_uea(input);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
