#include "sinbad/detector.hpp"
#include "sinbad/error.hpp"
#include "sinbad/io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sinbad;

namespace {

ElementMatrix random_set(Eigen::Index rows, Eigen::Index dims, std::mt19937& rng, float scale = 1.0f) {
    std::normal_distribution<float> normal;
    ElementMatrix m(rows, dims);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng);
    return m;
}

// Samples carrying one element set per key, all of width `dims`.
std::vector<Sample> make_samples(int n, const std::vector<GroupKeys>& keys, Eigen::Index dims,
                                 unsigned seed, Label label = Label::normal, float scale = 1.0f) {
    std::mt19937 rng(seed);
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.id = "s" + std::to_string(seed) + "_" + std::to_string(i);
        s.label = label;
        s.label_name = to_string(label);
        for (const auto& k : keys) s.sets[GroupKey::from_keys(k)] = random_set(12, dims, rng, scale);
        out.push_back(std::move(s));
    }
    return out;
}

LevelConfig small_level(const std::string& id) {
    auto cfg = LevelConfig::defaults_for(id);
    cfg.descriptor.projections = 6;
    cfg.descriptor.bins = 4;
    return cfg;
}

const std::vector<GroupKeys> kTs{{{"level", "ts"}}};

}  // namespace

TEST(LevelConfig, DefaultsPerLevel) {
    const auto ts = LevelConfig::defaults_for("ts");
    EXPECT_EQ(ts.descriptor.projections, 100);
    EXPECT_EQ(ts.descriptor.bins, 20);
    EXPECT_EQ(ts.scorer, Scorer::maha);
    EXPECT_EQ(ts.alpha, 0.1);
    EXPECT_TRUE(ts.descriptor.cumulative);
    EXPECT_EQ(ts.descriptor.edge_mode, EdgeMode::equal_width);

    for (const char* id : {"block3", "block4"}) {
        const auto b = LevelConfig::defaults_for(id);
        EXPECT_EQ(b.descriptor.projections, 1000);
        EXPECT_EQ(b.descriptor.bins, 5);
        EXPECT_EQ(b.scorer, Scorer::knn);
        EXPECT_EQ(b.k, 1);
        EXPECT_EQ(b.weight, 1.0);
    }
    const auto raw = LevelConfig::defaults_for("raw_pixels");
    EXPECT_EQ(raw.descriptor.projections, 10);
    EXPECT_EQ(raw.weight, 0.1);
    EXPECT_EQ(raw.repeats, 32);
    EXPECT_EQ(raw.repeat_reduce, RepeatReduce::median);
    EXPECT_FALSE(raw.whitening);
}

TEST(LevelConfig, Validation) {
    auto cfg = LevelConfig::defaults_for("ts");
    EXPECT_NO_THROW(cfg.validate());
    cfg.weight = -1;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = LevelConfig::defaults_for("ts");
    cfg.repeats = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = LevelConfig::defaults_for("ts");
    cfg.descriptor.bins = 1;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CropSchedule, CentersPerRatio) {
    const CropSchedule schedule;
    EXPECT_EQ(schedule.centers(1.0), (std::vector<std::pair<double, double>>{{0.5, 0.5}}));
    EXPECT_EQ(schedule.centers(0.7).size(), 1u);
    const auto half = schedule.centers(0.5);
    ASSERT_EQ(half.size(), 9u);
    EXPECT_EQ(half.front(), std::make_pair(0.25, 0.25));
    EXPECT_EQ(half.back(), std::make_pair(0.75, 0.75));
    EXPECT_EQ(schedule.centers(0.33).size(), 9u);
    CropSchedule bad;
    bad.ratios = {1.2};
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = CropSchedule{};
    bad.center_stride = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(GroupKey, FromKeys) {
    const auto k = GroupKey::from_keys({{"level", "block3"}, {"crop_ratio", "0.5"}, {"cx", "0.25"}, {"cy", "0.75"}});
    EXPECT_EQ(k.level, "block3");
    EXPECT_EQ(k.ratio, "0.5");
    EXPECT_EQ(k.center, "cx=0.25;cy=0.75");
    const auto d = GroupKey::from_keys({});
    EXPECT_EQ(d.level, "default");
    EXPECT_EQ(d.ratio, "1");
}

TEST(Detector, SingleGroupFinalIsRawScorerOutput) {
    const auto train = make_samples(10, kTs, 5, 1);
    const auto det = fit_detector(train, {small_level("ts")}, 7);
    ASSERT_EQ(det.levels().size(), 1u);
    ASSERT_EQ(det.levels()[0].repeats.size(), 1u);
    const auto& group = det.levels()[0].repeats[0].at(0);
    const auto probe = make_samples(1, kTs, 5, 2).front();
    const auto& elements = probe.sets.begin()->second;
    const auto h = group.descriptor.describe(elements);
    EXPECT_EQ(det.score(probe).final, mahalanobis_score(group.gaussian, h.values));
    EXPECT_EQ(det.score(probe, Scorer::knn).final, knn_score(group.bank, group.gaussian, h.values));
}

TEST(Detector, ScoreWithMatchesIndividualScores) {
    const auto train = make_samples(8, kTs, 4, 3);
    const auto det = fit_detector(train, {small_level("ts")}, 1);
    const auto probe = make_samples(1, kTs, 4, 4).front();
    const Scorer both[] = {Scorer::maha, Scorer::knn};
    const auto scores = det.score_with(probe, both);
    EXPECT_EQ(scores[0].final, det.score(probe, Scorer::maha).final);
    EXPECT_EQ(scores[1].final, det.score(probe, Scorer::knn).final);
}

TEST(Detector, TrainingSampleScoresZeroUnderKnn) {
    const auto train = make_samples(6, kTs, 4, 5);
    const auto det = fit_detector(train, {small_level("ts")}, 1);
    EXPECT_EQ(det.score(train[2], Scorer::knn).final, 0.0);
}

TEST(CombineLevels, Arithmetic) {
    const double two[] = {2.0, 4.0};
    const double ones[] = {1.0, 1.0};
    EXPECT_DOUBLE_EQ(combine_levels(two, ones), 3.0);
    const double abc[] = {0.3, 1.7, 5.0};
    const double w[] = {1.0, 1.0, 0.1};
    EXPECT_DOUBLE_EQ(combine_levels(abc, w), (0.3 + 1.7 + 0.1 * 5.0) / 2.1);
    const double bad_w[] = {1.0};
    EXPECT_THROW(combine_levels(abc, bad_w), ConfigError);
}

TEST(Detector, CropAggregationByHand) {
    // Two ratios; ratio 0.5 has two centers. Level score = mean over ratios of
    // the mean over centers.
    const std::vector<GroupKeys> keys{
        {{"level", "ts"}, {"crop_ratio", "1"}},
        {{"level", "ts"}, {"crop_ratio", "0.5"}, {"cx", "0.25"}},
        {{"level", "ts"}, {"crop_ratio", "0.5"}, {"cx", "0.75"}},
    };
    const auto train = make_samples(9, keys, 3, 6);
    const auto det = fit_detector(train, {small_level("ts")}, 2);
    const auto probe = make_samples(1, keys, 3, 7).front();
    std::map<std::string, double> g;
    for (const auto& group : det.levels()[0].repeats[0]) {
        g[group.key.describe()] = group.score(probe.sets.at(group.key), Scorer::maha);
    }
    const double expected = (g.at("ts/ratio=1") + 0.5 * (g.at("ts/ratio=0.5/cx=0.25") + g.at("ts/ratio=0.5/cx=0.75"))) / 2.0;
    EXPECT_NEAR(det.score(probe).final, expected, 1e-12);
}

TEST(Detector, WeightedLevels) {
    const std::vector<GroupKeys> keys{{{"level", "a"}}, {{"level", "b"}}, {{"level", "c"}}};
    const auto train = make_samples(8, keys, 4, 8);
    auto a = small_level("a");
    auto b = small_level("b");
    auto c = small_level("c");
    c.weight = 0.1;
    const auto det = fit_detector(train, {a, b, c}, 3);
    const auto probe = make_samples(1, keys, 4, 9).front();
    const auto s = det.score(probe);
    EXPECT_NEAR(s.final, (s.levels.at("a") + s.levels.at("b") + 0.1 * s.levels.at("c")) / 2.1, 1e-12);
}

TEST(Detector, ZeroWeightLevelDoesNotChangeFinal) {
    const std::vector<GroupKeys> both{{{"level", "a"}}, {{"level", "b"}}};
    const std::vector<GroupKeys> only_a{{{"level", "a"}}};
    const auto train = make_samples(8, both, 4, 10);
    auto train_a = train;
    for (auto& s : train_a) s.sets.erase(GroupKey::from_keys({{"level", "b"}}));
    auto b = small_level("b");
    b.weight = 0.0;
    const auto det_ab = fit_detector(train, {small_level("a"), b}, 4);
    const auto det_a = fit_detector(train_a, {small_level("a")}, 4);
    auto probe = make_samples(1, both, 4, 11).front();
    const double with_b = det_ab.score(probe).final;
    probe.sets.erase(GroupKey::from_keys({{"level", "b"}}));
    EXPECT_EQ(with_b, det_a.score(probe).final);
}

TEST(Detector, RawPixelRepeatsAreStoredAndReducedByMedian) {
    const std::vector<GroupKeys> keys{{{"level", "raw_pixels"}}};
    const auto train = make_samples(6, keys, 8, 12);
    const auto det = fit_detector(train, {}, 5);  // level defaults
    const auto& level = det.levels().at(0);
    ASSERT_EQ(level.repeats.size(), 32u);
    std::set<std::uint64_t> seeds;
    for (const auto& r : level.repeats) seeds.insert(r.at(0).seed);
    EXPECT_EQ(seeds.size(), 32u);

    const auto probe = make_samples(1, keys, 8, 13).front();
    std::vector<double> per_repeat;
    for (const auto& r : level.repeats) per_repeat.push_back(r.at(0).score(probe.sets.begin()->second, Scorer::knn));
    EXPECT_EQ(det.score(probe).final, median(per_repeat));

    test::TempDir dir;
    det.save(dir.path());
    int repeat_dirs = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "raw_pixels")) repeat_dirs += e.is_directory();
    EXPECT_EQ(repeat_dirs, 32);
}

TEST(Detector, MeanRepeatReduction) {
    auto cfg = small_level("ts");
    cfg.repeats = 3;
    const auto train = make_samples(6, kTs, 4, 14);
    const auto det = fit_detector(train, {cfg}, 6);
    const auto probe = make_samples(1, kTs, 4, 15).front();
    double sum = 0.0;
    for (const auto& r : det.levels()[0].repeats) sum += r.at(0).score(probe.sets.begin()->second, Scorer::maha);
    EXPECT_NEAR(det.score(probe).final, sum / 3.0, 1e-12);
}

TEST(Detector, SaveLoadRoundTripScoresIdentically) {
    const std::vector<GroupKeys> keys{{{"level", "block3"}}, {{"level", "ts"}, {"crop_ratio", "0.5"}}};
    const auto train = make_samples(7, keys, 6, 16);
    auto knn_level = small_level("block3");
    knn_level.k = 3;
    knn_level.standardize = true;
    auto ts = small_level("ts");
    ts.descriptor.mode = ProjectionMode::pca;
    ts.descriptor.edge_mode = EdgeMode::quantile;
    ts.repeats = 2;
    const auto det = fit_detector(train, {knn_level, ts}, 11);
    test::TempDir dir;
    det.save(dir.path());
    const auto back = Detector::load(dir.path());
    EXPECT_EQ(back.seed(), 11u);
    ASSERT_EQ(back.levels().size(), 2u);
    EXPECT_EQ(back.levels()[0].config.k, 3);
    EXPECT_TRUE(back.levels()[0].config.standardize);
    EXPECT_EQ(back.levels()[1].config.repeats, 2);
    for (const auto& probe : make_samples(4, keys, 6, 17)) {
        const auto a = det.score(probe);
        const auto b = back.score(probe);
        EXPECT_EQ(a.final, b.final);
        EXPECT_EQ(a.levels, b.levels);
        EXPECT_EQ(det.score(probe, Scorer::maha).final, back.score(probe, Scorer::maha).final);
    }
}

TEST(Detector, DeletingALevelsFilesIsAMissingGroup) {
    const std::vector<GroupKeys> keys{{{"level", "a"}}, {{"level", "b"}}};
    const auto det = fit_detector(make_samples(5, keys, 3, 18), {small_level("a"), small_level("b")}, 1);
    test::TempDir dir;
    det.save(dir.path());
    std::filesystem::remove_all(dir / "b");
    try {
        Detector::load(dir.path());
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("missing group"), std::string::npos);
    }
    EXPECT_THROW(Detector::load(dir / "nowhere"), DataError);
}

TEST(Detector, TestSampleMissingAGroup) {
    const std::vector<GroupKeys> keys{{{"level", "a"}}, {{"level", "b"}}};
    const auto det = fit_detector(make_samples(5, keys, 3, 19), {small_level("a"), small_level("b")}, 1);
    auto probe = make_samples(1, keys, 3, 20).front();
    probe.sets.erase(GroupKey::from_keys({{"level", "a"}}));
    try {
        det.score(probe);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("missing group"), std::string::npos);
    }
}

TEST(Detector, FitErrors) {
    auto train = make_samples(5, kTs, 3, 21);
    train[1].label = Label::anomalous;
    try {
        fit_detector(train, {small_level("ts")}, 1);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("leakage"), std::string::npos);
    }

    train = make_samples(5, {{{"level", "a"}}, {{"level", "b"}}}, 3, 22);
    train[3].sets.erase(GroupKey::from_keys({{"level", "b"}}));
    EXPECT_THROW(fit_detector(train, {}, 1), DataError);

    train = make_samples(5, kTs, 3, 23);
    train[2].sets.begin()->second = ElementMatrix::Zero(4, 5);
    EXPECT_THROW(fit_detector(train, {small_level("ts")}, 1), DataError);

    EXPECT_THROW(fit_detector(make_samples(1, kTs, 3, 24), {small_level("ts")}, 1), DataError);

    auto zero = small_level("ts");
    zero.weight = 0.0;
    EXPECT_THROW(fit_detector(make_samples(4, kTs, 3, 25), {zero}, 1), ConfigError);
}

TEST(Detector, IdenticalTrainingSetsAreDegenerate) {
    auto train = make_samples(4, kTs, 3, 26);
    for (auto& s : train) s.sets.begin()->second = train[0].sets.begin()->second;
    EXPECT_THROW(fit_detector(train, {small_level("ts")}, 1), DegenerateModelError);
}

TEST(Detector, KIsClampedToTrainingSize) {
    auto cfg = small_level("ts");
    cfg.scorer = Scorer::knn;
    cfg.k = 50;
    const auto det = fit_detector(make_samples(4, kTs, 3, 27), {cfg}, 1);
    EXPECT_EQ(det.levels()[0].repeats[0][0].bank.k, 4);
}

TEST(Detector, StandardizedTrainingScoresAreCentered) {
    auto cfg = small_level("ts");
    cfg.standardize = true;
    const auto train = make_samples(12, kTs, 4, 28);
    const auto det = fit_detector(train, {cfg}, 2);
    double sum = 0.0;
    for (const auto& s : train) sum += det.score(s, Scorer::maha).final;
    EXPECT_NEAR(sum / 12.0, 0.0, 1e-9);
}

TEST(Detector, FittingIsDeterministic) {
    const auto train = make_samples(6, kTs, 4, 29);
    const auto a = fit_detector(train, {small_level("ts")}, 9);
    const auto b = fit_detector(train, {small_level("ts")}, 9);
    const auto c = fit_detector(train, {small_level("ts")}, 10);
    const auto probe = make_samples(1, kTs, 4, 30).front();
    EXPECT_EQ(a.score(probe).final, b.score(probe).final);
    EXPECT_NE(a.score(probe).final, c.score(probe).final);
}

TEST(DeriveSeed, DependsOnEveryInput) {
    EXPECT_EQ(derive_seed(1, "ts", 0), derive_seed(1, "ts", 0));
    EXPECT_NE(derive_seed(1, "ts", 0), derive_seed(2, "ts", 0));
    EXPECT_NE(derive_seed(1, "ts", 0), derive_seed(1, "block3", 0));
    EXPECT_NE(derive_seed(1, "ts", 0), derive_seed(1, "ts", 1));
}

TEST(RunRepeats, SingleRunHasZeroStd) {
    const auto r = run_repeats([](std::uint64_t seed) { return double(seed); }, 1, 5);
    EXPECT_EQ(r.mean, 5.0);
    EXPECT_EQ(r.std, 0.0);
}

TEST(RunRepeats, SeedsAreConsecutive) {
    std::vector<std::uint64_t> seen;
    const auto r = run_repeats([&](std::uint64_t seed) { seen.push_back(seed); return double(seed); }, 3, 10);
    EXPECT_EQ(seen, (std::vector<std::uint64_t>{10, 11, 12}));
    EXPECT_DOUBLE_EQ(r.mean, 11.0);
    EXPECT_DOUBLE_EQ(r.std, 1.0);
    EXPECT_THROW(run_repeats([](std::uint64_t) { return 0.0; }, 0), ConfigError);
}

TEST(RunRepeats, DeterminismBoundary) {
    const auto train = make_samples(8, kTs, 4, 31);
    const auto probe = make_samples(1, kTs, 4, 32).front();
    // Fixed descriptor seed: identical metric for every repeat.
    const auto fixed = run_repeats([&](std::uint64_t) {
        return fit_detector(train, {small_level("ts")}, 77).score(probe).final;
    }, 4);
    EXPECT_EQ(fixed.std, 0.0);
    // Seed follows the repeat: the metric varies.
    const auto varying = run_repeats([&](std::uint64_t seed) {
        return fit_detector(train, {small_level("ts")}, seed).score(probe).final;
    }, 4);
    EXPECT_GT(varying.std, 0.0);
}

TEST(LoadSamples, GroupsEntriesBySampleId) {
    test::TempDir dir;
    std::mt19937 rng(33);
    DatasetManifest m;
    m.split = Split::test;
    m.base_dir = dir.path();
    for (const char* id : {"x", "y"}) {
        for (const char* level : {"block3", "block4"}) {
            ElementSet set;
            set.elements = random_set(3, 2, rng);
            const std::string file = std::string(id) + "_" + level + ".sinb";
            write_element_set(set, dir / file);
            ManifestEntry e;
            e.sample_id = id;
            e.label = Label::anomalous;
            e.label_name = "anomalous";
            e.group_keys = {{"level", level}};
            e.path = file;
            m.entries.push_back(e);
        }
    }
    const auto samples = load_samples(m);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].sets.size(), 2u);
    EXPECT_EQ(samples[1].label, Label::anomalous);

    m.entries[1].label = Label::normal;
    EXPECT_THROW(load_samples(m), DataError);
}
