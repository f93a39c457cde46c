#include "doctest.h"
#include "support.hpp"

#include "phantom/io.hpp"
#include "phantom/workbench.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace phantom;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
    std::istringstream in(text);
    return Config::parse(in, "test.cfg");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Small enough for a handful of full pipeline runs.
ExperimentConfig small(std::uint64_t seed = 1) {
    ExperimentConfig e = ExperimentConfig::from(parse("synth.seen = 10\n"
                                                      "synth.unseen = 4\n"
                                                      "synth.feature_dim = 10\n"
                                                      "synth.embed_dim = 5\n"
                                                      "synth.samples_per_class = 20\n"
                                                      "cv.folds = 3\n"
                                                      "grid.lambda = 0.25, 1\n"
                                                      "grid.sigma = 0.5, 1\n"
                                                      "max_iters = 60\n"
                                                      "seed = " + std::to_string(seed) + "\n"));
    return e;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("phantom_wb_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config parsing") {
    const Config c = parse("# comment\n\n  lambda = 0.5  \nname=a b\ngrid.sigma = 1, 2,4\nflag = yes\n");
    CHECK(c.get_double("lambda", 0) == 0.5);
    CHECK(c.get("name", "") == "a b");
    CHECK(c.get_doubles("grid.sigma", {}) == std::vector<double>{1, 2, 4});
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_int("missing", 7) == 7);

    try {
        parse("lambda 0.5\n");
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(std::string(e.what()).find("test.cfg:1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse(" = 3\n"), Error);
    CHECK_THROWS_AS(parse("x = abc\n").get_double("x", 0), Error);
    CHECK_THROWS_AS(parse("x = 1.5\n").get_int("x", 0), Error);
    CHECK_THROWS_AS(parse("x = maybe\n").get_bool("x", false), Error);
    CHECK_THROWS_AS(parse("x = 1,,2\n").get_doubles("x", {}), Error);
    CHECK_THROWS_AS(parse("x = nan\n").get_double("x", 0), Error);
}

TEST_CASE("experiment config validation and echo") {
    CHECK_THROWS_AS(ExperimentConfig::from(parse("loss = svm\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("cv.mode = random\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("cv.folds = 1\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("init = spiral\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("metric = cosine\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("topk = 0\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("data = web\n")), Error);
    CHECK_THROWS_AS(ExperimentConfig::from(parse("lamda = 2\n")), Error);

    CHECK_FALSE(ExperimentConfig::from(parse("features = x.mat\n")).synthetic);

    const ExperimentConfig e = ExperimentConfig::from(parse("loss = cs\nlambda = 0.125\nsigma = 3\ncv.mode = samplewise\n"
                                                            "grid.lambda = 0.1, 0.3\nnum_phantom = 7\ninit = kmeans\n"
                                                            "seed = 42\ntopk = 1, 3\nsweep.ratios = 0.5, 1\n"));
    std::ostringstream os;
    e.to_config().write(os);
    std::istringstream in(os.str());
    const ExperimentConfig back = ExperimentConfig::from(Config::parse(in));
    std::ostringstream again;
    back.to_config().write(again);
    CHECK(again.str() == os.str());
    CHECK(back.loss == "cs");
    CHECK(back.lambda == 0.125);
    CHECK(back.cv_mode == FoldMode::SampleWise);
    CHECK(back.grid.lambda_values == std::vector<double>{0.1, 0.3});
    CHECK(back.num_phantom == 7);
    CHECK(back.seed == 42);
    CHECK(back.synth.seed == e.synth.seed);
    CHECK(back.topk == std::vector<Index>{1, 3});
}

TEST_CASE("synthetic data") {
    SyntheticSpec spec;
    spec.seed = 5;
    const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
    CHECK(a.seen_train.features == b.seen_train.features);
    CHECK(a.unseen_test.features == b.unseen_test.features);
    CHECK(a.seen_embeddings.vectors() == b.seen_embeddings.vectors());
    CHECK(a.seen_train.size() == spec.seen * spec.samples_per_class);
    CHECK(a.ground_truth.rows() == spec.seen + spec.unseen);
    for (Index r = 0; r < a.seen_embeddings.size(); ++r) CHECK(a.seen_embeddings.vectors().row(r).norm() == doctest::Approx(1.0));

    SyntheticSpec twice = spec;
    twice.samples_per_class *= 2;
    CHECK(generate_synthetic(twice).seen_train.size() == 2 * a.seen_train.size());
    CHECK(generate_synthetic(twice).unseen_test.size() == 2 * a.unseen_test.size());

    // without noise every point lies on its own class direction
    SyntheticSpec clean = spec;
    clean.noise_std = 0.0;
    const auto c = generate_synthetic(clean);
    Matrix dirs = c.ground_truth.topRows(clean.seen);
    for (Index r = 0; r < dirs.rows(); ++r) dirs.row(r).normalize();
    const Matrix cos = c.seen_train.features * dirs.transpose();
    for (Index n = 0; n < cos.rows(); ++n) {
        Index best;
        cos.row(n).maxCoeff(&best);
        CHECK(best == c.seen_train.labels[static_cast<std::size_t>(n)]);
    }

    SyntheticSpec bad = spec;
    bad.unseen = 0;
    try {
        generate_synthetic(bad);
        FAIL("expected InvalidSpec");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
}

TEST_CASE("init resolution") {
    CHECK(resolve_init("auto", 10, 10) == InitStrategy::Identity);
    CHECK(resolve_init("auto", 4, 10) == InitStrategy::KMeansCentroids);
    CHECK(resolve_init("auto", 15, 10) == InitStrategy::Mixed);
    CHECK(resolve_init("random_subset", 4, 10) == InitStrategy::RandomSubset);
}

TEST_CASE("zero-shot pipeline on a small synthetic problem") {
    const ExperimentConfig cfg = small();
    const Problem p = load_problem(cfg);
    const ZeroShotResult a = run_zero_shot(p, cfg);
    REQUIRE(a.cv_stage1.has_value());
    CHECK(a.cv_stage1->cells.size() == 4);
    CHECK(a.report.per_class_accuracy > 0.5); // chance is 0.25
    CHECK(a.unseen_models.vectors.rows() == 4);
    CHECK(a.report.flat_hits.at(1) >= 0.0);

    const ZeroShotResult b = run_zero_shot(p, cfg);
    CHECK(a.report.per_class_accuracy == b.report.per_class_accuracy);
    CHECK(a.unseen_models.vectors == b.unseen_models.vectors);

    ExperimentConfig one = cfg;
    one.synth.unseen = 1;
    one.cv = false;
    CHECK(run_zero_shot(load_problem(one), one).report.per_class_accuracy == 1.0);
}

TEST_CASE("pipeline variants run") {
    ExperimentConfig cfg = small(2);
    cfg.cv = false;
    const Problem p = load_problem(cfg);
    for (const char* loss : {"cs", "cs_struct"}) {
        ExperimentConfig c = cfg;
        c.loss = loss;
        CHECK(run_zero_shot(p, c).report.per_class_accuracy > 0.25);
    }
    ExperimentConfig learned = cfg;
    learned.learn_phantoms = true;
    learned.eta = 0.01;
    learned.gamma = 0.1;
    learned.outer_rounds = 2;
    const auto lr = run_zero_shot(p, learned);
    REQUIRE(lr.trained.beta.has_value());
    CHECK(lr.trained.beta->coeffs.allFinite());
    CHECK(lr.trained.phantom.size() == 10);

    ExperimentConfig metric = cfg;
    metric.metric = "learned";
    metric.metric_rounds = 1;
    CHECK(std::holds_alternative<Diagonal>(run_zero_shot(p, metric).trained.metric.variant()));
    metric.num_phantom = 5;
    CHECK_THROWS_AS(run_zero_shot(p, metric), Error);

    const auto conse = run_conse(p, cfg);
    CHECK(conse.T == cfg.conse_T);
    CHECK(conse.report.per_class_accuracy >= 0.0);
}

TEST_CASE("phantom-count sweep") {
    const ExperimentConfig cfg = small(3);
    const Problem p = load_problem(cfg);
    const auto rows = sweep_phantom_count(p, cfg, {0.2, 0.6, 1.0});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].num_phantom == 2);
    CHECK(rows[1].num_phantom == 6);
    CHECK(rows[2].num_phantom == 10);
    CHECK(rows[2].relative == 1.0);
    CHECK_THROWS_AS(sweep_phantom_count(p, cfg, {0.0}), Error);
    CHECK_THROWS_AS(sweep_phantom_count(p, cfg, {2.5}), Error);

    std::ostringstream os;
    write_sweep(os, rows);
    const std::string table = os.str();
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);
}

TEST_CASE("manifest reruns reproduce every output") {
    TempDir first("first"), second("second");
    ExperimentConfig cfg = small(4);
    cfg.output_dir = first.path.string();
    run_zero_shot(cfg);
    const std::string manifest = slurp(first.path / "manifest.txt");
    for (const char* f : {"report.tsv", "cv_stage1.tsv", "bases.mat", "phantoms.emb", "metric.txt",
                          "unseen_similarity.mat", "unseen_classifiers.emb"}) {
        CAPTURE(f);
        CHECK(fs::exists(first.path / f));
        CHECK(manifest.find(std::string("# output ") + f + " fnv1a64=" + file_digest((first.path / f).string())) !=
              std::string::npos);
    }

    ExperimentConfig rerun = ExperimentConfig::from(Config::load((first.path / "manifest.txt").string()));
    rerun.output_dir = second.path.string();
    run_zero_shot(rerun);
    for (const auto& entry : fs::directory_iterator(first.path)) {
        const auto name = entry.path().filename();
        if (name == "manifest.txt") continue;
        CAPTURE(name.string());
        CHECK(slurp(entry.path()) == slurp(second.path / name));
    }
}

TEST_CASE("file-based problems") {
    TempDir dir("files");
    const auto d = generate_synthetic(small(5).synth);
    const auto f = [&](const char* n) { return (dir.path / n).string(); };
    save_matrix(f("train.mat"), d.seen_train.features);
    save_matrix(f("test.mat"), d.unseen_test.features);
    std::vector<std::string> tr, te;
    for (int y : d.seen_train.labels) tr.push_back(d.seen_embeddings.class_ids()[static_cast<std::size_t>(y)]);
    for (int y : d.unseen_test.labels) te.push_back(d.unseen_embeddings.class_ids()[static_cast<std::size_t>(y)]);
    save_labels(f("train.txt"), tr);
    save_labels(f("test.txt"), te);
    Matrix all(d.seen_embeddings.size() + d.unseen_embeddings.size(), d.seen_embeddings.dim());
    all << d.seen_embeddings.vectors(), d.unseen_embeddings.vectors();
    std::vector<std::string> ids = d.seen_embeddings.class_ids();
    ids.insert(ids.end(), d.unseen_embeddings.class_ids().begin(), d.unseen_embeddings.class_ids().end());
    save_embeddings(f("emb.emb"), ids, all);
    save_split(f("split.txt"), {d.seen_embeddings.class_ids(), d.unseen_embeddings.class_ids()});

    std::ostringstream text;
    text << "features = " << f("train.mat") << "\nlabels = " << f("train.txt") << "\ntest_features = " << f("test.mat")
         << "\ntest_labels = " << f("test.txt") << "\nembeddings = " << f("emb.emb") << "\nsplit = " << f("split.txt")
         << "\ncv = false\nmax_iters = 60\n";
    const ExperimentConfig cfg = ExperimentConfig::from(parse(text.str()));
    const Problem p = load_problem(cfg);
    CHECK(p.seen_train.features == d.seen_train.features);
    CHECK(p.seen_train.labels == d.seen_train.labels);
    CHECK(p.unseen_test.labels == d.unseen_test.labels);
    CHECK((p.seen.vectors() - d.seen_embeddings.vectors()).cwiseAbs().maxCoeff() < 1e-15);

    ExperimentConfig synthetic = small(5);
    synthetic.cv = false;
    CHECK(run_zero_shot(p, cfg).report.per_class_accuracy ==
          run_zero_shot(load_problem(synthetic), synthetic).report.per_class_accuracy);

    save_labels(f("short.txt"), {"c000"});
    ExperimentConfig broken = cfg;
    broken.labels = f("short.txt");
    CHECK_THROWS_AS(load_problem(broken), Error);
    broken = cfg;
    broken.split.clear();
    CHECK_THROWS_AS(load_problem(broken), Error);
}
