// phantom-sync: command-line front end for the zero-shot workbench.

#include "phantom/io.hpp"
#include "phantom/kernels.hpp"
#include "phantom/random.hpp"
#include "phantom/workbench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

using namespace phantom;

namespace {

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string output;
    long long seed = -1;
};

ExperimentConfig resolve(const CommonArgs& a) {
    Config c = a.config.empty() ? Config{} : Config::load(a.config);
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
        c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (a.seed >= 0) c.set("seed", std::to_string(a.seed));
    if (!a.output.empty()) c.set("output_dir", a.output);
    return ExperimentConfig::from(c);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

void require_output(const ExperimentConfig& cfg, const char* verb) {
    if (cfg.output_dir.empty()) fail(ErrorKind::Config, std::string(verb) + " needs an output directory (-o)");
    std::filesystem::create_directories(cfg.output_dir);
}

void print_report(const EvalReport& r) {
    std::printf("per_class_accuracy\t%.6f\n", r.per_class_accuracy);
    for (const auto& [k, v] : r.flat_hits) std::printf("flat_hit@%lld\t%.6f\n", static_cast<long long>(k), v);
    for (const auto& [k, v] : r.hierarchical_precision)
        std::printf("hier_precision@%lld\t%.6f\n", static_cast<long long>(k), v);
}

void save_report(const ExperimentConfig& cfg, const EvalReport& r, std::vector<std::string>& outputs) {
    std::ofstream os(out_path(cfg, "report.tsv"));
    write_eval_report(os, r);
    outputs.push_back("report.tsv");
}

void save_trained(const ExperimentConfig& cfg, const TrainOutcome& t, std::vector<std::string>& outputs) {
    save_matrix(out_path(cfg, "bases.mat"), t.bases.vectors);
    outputs.push_back("bases.mat");
    save_embeddings(out_path(cfg, "phantoms.emb"), t.phantom.class_ids(), t.phantom.vectors());
    outputs.push_back("phantoms.emb");
    if (t.beta) {
        save_matrix(out_path(cfg, "beta.mat"), t.beta->coeffs);
        outputs.push_back("beta.mat");
    }
    std::ofstream os(out_path(cfg, "metric.txt"));
    if (const auto* s = std::get_if<ScaledIdentity>(&t.metric.variant())) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", s->sigma);
        os << "scaled_identity " << buf << '\n';
    } else {
        os << "diagonal\n";
        write_matrix(os, std::get<Diagonal>(t.metric.variant()).m.transpose());
    }
    outputs.push_back("metric.txt");
}

// synth-data: writes a file-based copy of the synthetic problem plus a config
// that points at it, so the other verbs can run from files.
int cmd_synth(const ExperimentConfig& cfg) {
    require_output(cfg, "synth-data");
    SyntheticData d = generate_synthetic(cfg.synth);
    auto label_ids = [](const LabeledDataset& ds, const EmbeddingTable& t) {
        std::vector<std::string> ids;
        for (int y : ds.labels) ids.push_back(t.class_ids()[static_cast<std::size_t>(y)]);
        return ids;
    };
    std::vector<std::string> outputs = {"train_features.mat", "train_labels.txt", "test_features.mat",
                                        "test_labels.txt",    "embeddings.emb",   "split.txt",
                                        "ground_truth.mat"};
    save_matrix(out_path(cfg, outputs[0]), d.seen_train.features);
    save_labels(out_path(cfg, outputs[1]), label_ids(d.seen_train, d.seen_embeddings));
    save_matrix(out_path(cfg, outputs[2]), d.unseen_test.features);
    save_labels(out_path(cfg, outputs[3]), label_ids(d.unseen_test, d.unseen_embeddings));
    std::vector<std::string> ids = d.seen_embeddings.class_ids();
    ids.insert(ids.end(), d.unseen_embeddings.class_ids().begin(), d.unseen_embeddings.class_ids().end());
    Matrix all(ids.size(), d.seen_embeddings.dim());
    all << d.seen_embeddings.vectors(), d.unseen_embeddings.vectors();
    save_embeddings(out_path(cfg, outputs[4]), ids, all);
    save_split(out_path(cfg, outputs[5]), {d.seen_embeddings.class_ids(), d.unseen_embeddings.class_ids()});
    save_matrix(out_path(cfg, outputs[6]), d.ground_truth);

    ExperimentConfig files = cfg;
    files.synthetic = false;
    files.features = out_path(cfg, outputs[0]);
    files.labels = out_path(cfg, outputs[1]);
    files.test_features = out_path(cfg, outputs[2]);
    files.test_labels = out_path(cfg, outputs[3]);
    files.embeddings = out_path(cfg, outputs[4]);
    files.split = out_path(cfg, outputs[5]);
    files.output_dir.clear();
    {
        std::ofstream os(out_path(cfg, "data.cfg"));
        files.to_config().write(os);
    }
    outputs.push_back("data.cfg");
    write_manifest(cfg.output_dir, cfg, outputs);
    std::printf("wrote %zu seen and %zu unseen samples to %s\n", static_cast<std::size_t>(d.seen_train.size()),
                static_cast<std::size_t>(d.unseen_test.size()), cfg.output_dir.c_str());
    return 0;
}

int cmd_cv(const ExperimentConfig& cfg) {
    const Problem p = load_problem(cfg);
    ExperimentConfig c = cfg;
    c.cv = true;
    const FoldPlan plan = make_folds(p.seen_train.labels, c.cv_folds, c.cv_mode, substream_seed(c.seed, "folds"));
    CvSettings st;
    st.loss = c.loss_kind(p.seen);
    st.train = c.train_config();
    const CvResult r1 = cross_validate(p.seen_train, p.seen, c.grid, plan, st);
    std::printf("lambda\t%.17g\nsigma\t%.17g\n", r1.best.lambda, r1.best.sigma);
    std::vector<std::string> outputs;
    if (!c.output_dir.empty()) {
        std::filesystem::create_directories(c.output_dir);
        std::ofstream os(out_path(c, "cv_stage1.tsv"));
        write_cv_report(os, r1);
        outputs.push_back("cv_stage1.tsv");
    }
    if (c.learn_phantoms) {
        st.stage = CvStage::EtaGamma;
        st.frozen = r1.best;
        st.phantom.h = c.h;
        st.phantom.outer_rounds = c.outer_rounds;
        st.phantom.beta_iters = c.beta_iters;
        const CvResult r2 = cross_validate(p.seen_train, p.seen, c.grid, plan, st);
        std::printf("eta\t%.17g\ngamma\t%.17g\n", r2.best.eta, r2.best.gamma);
        if (!c.output_dir.empty()) {
            std::ofstream os(out_path(c, "cv_stage2.tsv"));
            write_cv_report(os, r2);
            outputs.push_back("cv_stage2.tsv");
        }
    }
    if (!c.output_dir.empty()) write_manifest(c.output_dir, c, outputs);
    return 0;
}

int cmd_train(ExperimentConfig cfg, bool learn_metric) {
    require_output(cfg, learn_metric ? "learn-metric" : "train");
    if (learn_metric) cfg.metric = "learned";
    const Problem p = load_problem(cfg);
    const TrainOutcome t = train_stage(p, cfg, cfg.lambda, cfg.sigma, cfg.eta, cfg.gamma);
    std::vector<std::string> outputs;
    save_trained(cfg, t, outputs);
    write_manifest(cfg.output_dir, cfg, outputs);
    std::printf("trained %lld base classifiers: %d iterations, objective %.10g, |grad| %.3g (%s)\n",
                static_cast<long long>(t.bases.size()), t.report.iterations, t.report.final_objective,
                t.report.grad_norm, std::string(to_string(t.report.reason)).c_str());
    return 0;
}

int cmd_zero_shot(const ExperimentConfig& cfg) {
    const ZeroShotResult r = run_zero_shot(cfg);
    std::printf("lambda\t%.17g\nsigma\t%.17g\n", r.chosen.lambda, r.chosen.sigma);
    print_report(r.report);
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    const auto rows = sweep_phantom_count(cfg, cfg.sweep_ratios);
    write_sweep(std::cout, rows);
    return 0;
}

int cmd_conse(const ExperimentConfig& cfg) {
    const Problem p = load_problem(cfg);
    const ConseResult r = run_conse(p, cfg);
    std::printf("T\t%d\n", r.T);
    print_report(r.report);
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::vector<std::string> outputs;
        save_report(cfg, r.report, outputs);
        save_matrix(out_path(cfg, "conse_weights.mat"), r.fit.model.weights);
        save_matrix(out_path(cfg, "conse_biases.mat"), r.fit.model.biases);
        outputs.insert(outputs.end(), {"conse_weights.mat", "conse_biases.mat"});
        write_manifest(cfg.output_dir, cfg, outputs);
    }
    return 0;
}

// eval: scores saved unseen classifiers on the unseen test data.
int cmd_eval(const ExperimentConfig& cfg) {
    if (cfg.models.empty()) fail(ErrorKind::Config, "eval needs `models` (a classifier embeddings file)");
    const Problem p = load_problem(cfg);
    const EmbeddingTable models = load_embeddings(cfg.models, false);
    ClassifierSet set;
    set.vectors.resize(p.unseen.size(), models.dim());
    for (Index c = 0; c < p.unseen.size(); ++c) {
        const auto& id = p.unseen.class_ids()[static_cast<std::size_t>(c)];
        const Index row = models.index_of(id);
        if (row < 0) fail(ErrorKind::Config, "no classifier for unseen class '" + id + "'");
        set.class_ids.push_back(id);
        set.vectors.row(c) = models.vectors().row(row);
    }
    if (set.feature_dim() != p.unseen_test.dim())
        fail(ErrorKind::DimensionMismatch, "classifier and feature dimensions differ");
    const Matrix scores = decision_values(set, p.unseen_test.features);
    std::vector<Index> truths(p.unseen_test.labels.begin(), p.unseen_test.labels.end());
    EvalReport report;
    if (cfg.hierarchy.empty()) {
        report = evaluate_scores(scores, truths, set.class_ids, cfg.topk);
    } else {
        const Hierarchy h = load_hierarchy(cfg.hierarchy, cfg.valid_labels);
        std::vector<Index> nodes;
        for (const auto& id : set.class_ids) {
            const Index n = h.index_of(id);
            if (n < 0) fail(ErrorKind::Config, "class '" + id + "' is not in the hierarchy");
            nodes.push_back(n);
        }
        report = evaluate_scores(scores, truths, set.class_ids, cfg.topk, &h, nodes);
    }
    print_report(report);
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        std::vector<std::string> outputs;
        save_report(cfg, report, outputs);
        write_manifest(cfg.output_dir, cfg, outputs);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Zero-shot classification by synthesized classifiers"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (overrides PHANTOM_SYNC_THREADS)");

    CommonArgs args;
    std::map<std::string, std::function<int(const ExperimentConfig&)>> verbs = {
        {"synth-data", cmd_synth},
        {"train", [](const ExperimentConfig& c) { return cmd_train(c, false); }},
        {"cv", cmd_cv},
        {"zero-shot", cmd_zero_shot},
        {"sweep-r", cmd_sweep},
        {"conse", cmd_conse},
        {"eval", cmd_eval},
        {"learn-metric", [](const ExperimentConfig& c) { return cmd_train(c, true); }},
    };
    const std::map<std::string, std::string> help = {
        {"synth-data", "generate a synthetic problem as files"},
        {"train", "learn base classifiers on the seen classes"},
        {"cv", "cross-validate hyper-parameters"},
        {"zero-shot", "full pipeline: CV, training, synthesis, evaluation"},
        {"sweep-r", "accuracy versus number of phantom classes"},
        {"conse", "convex-combination baseline"},
        {"eval", "evaluate saved unseen classifiers"},
        {"learn-metric", "learn a diagonal metric with the base classifiers"},
    };
    for (const auto& [name, fn] : verbs) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("-c,--config", args.config, "key = value config file");
        sub->add_option("-s,--set", args.overrides, "override a config key (key=value)");
        sub->add_option("-o,--output", args.output, "output directory");
        sub->add_option("--seed", args.seed, "experiment seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (threads > 0)
            set_worker_count(threads);
        else
            configure_threads_from_env();
        for (const auto& [name, fn] : verbs)
            if (app.got_subcommand(name)) return fn(resolve(args));
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.is_numeric() ? 3 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
