#include "phantom/workbench.hpp"

#include "phantom/io.hpp"
#include "phantom/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace phantom {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += fmt_double(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config " + path);
    return parse(in, path);
}

Config Config::parse(std::istream& in, const std::string& source) {
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Config, source + ":" + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) fail(ErrorKind::Config, source + ":" + std::to_string(lineno) + ": empty key");
        cfg.set(key, trim(std::string_view(t).substr(eq + 1)));
    }
    return cfg;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    double v = 0.0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(ErrorKind::Config, "key '" + key + "': not a finite number '" + s + "'");
    return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    long long v = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(ErrorKind::Config, "key '" + key + "': not an integer '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const auto& s = it->second;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    fail(ErrorKind::Config, "key '" + key + "': not a boolean '" + s + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v))
            fail(ErrorKind::Config, "key '" + key + "': bad list entry '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void Config::write(std::ostream& os) const {
    for (const auto& [k, v] : kv_) os << k << " = " << v << '\n';
}

ExperimentConfig ExperimentConfig::from(const Config& c) {
    static const std::set<std::string> known = {
        "data", "synth.seen", "synth.unseen", "synth.feature_dim", "synth.embed_dim", "synth.samples_per_class",
        "synth.noise_std", "synth.margin", "features", "labels", "test_features", "test_labels", "embeddings",
        "split", "seen_embeddings", "unseen_embeddings", "hierarchy", "valid_labels", "normalize", "loss",
        "lambda", "sigma", "max_iters", "grad_tol", "cv", "cv.folds", "cv.mode", "grid.lambda", "grid.sigma",
        "grid.eta", "grid.gamma", "grid.T", "learn_phantoms", "eta", "gamma", "h", "outer_rounds", "beta_iters",
        "num_phantom", "init", "metric", "metric.gamma", "metric.sigma0", "metric.rounds", "conse.T", "conse.l2",
        "topk", "sweep.ratios", "models", "seed", "output_dir"};
    for (const auto& [k, v] : c.entries())
        if (!known.contains(k)) fail(ErrorKind::Config, "unknown config key '" + k + "'");

    ExperimentConfig e;
    const std::string data = c.get("data", c.has("features") ? "files" : "synthetic");
    if (data != "synthetic" && data != "files") fail(ErrorKind::Config, "data must be synthetic or files");
    e.synthetic = data == "synthetic";
    e.synth.seen = static_cast<int>(c.get_int("synth.seen", e.synth.seen));
    e.synth.unseen = static_cast<int>(c.get_int("synth.unseen", e.synth.unseen));
    e.synth.feature_dim = static_cast<int>(c.get_int("synth.feature_dim", e.synth.feature_dim));
    e.synth.embed_dim = static_cast<int>(c.get_int("synth.embed_dim", e.synth.embed_dim));
    e.synth.samples_per_class = static_cast<int>(c.get_int("synth.samples_per_class", e.synth.samples_per_class));
    e.synth.noise_std = c.get_double("synth.noise_std", e.synth.noise_std);
    e.synth.margin = c.get_double("synth.margin", e.synth.margin);

    e.features = c.get("features", "");
    e.labels = c.get("labels", "");
    e.test_features = c.get("test_features", "");
    e.test_labels = c.get("test_labels", "");
    e.embeddings = c.get("embeddings", "");
    e.split = c.get("split", "");
    e.seen_embeddings = c.get("seen_embeddings", "");
    e.unseen_embeddings = c.get("unseen_embeddings", "");
    e.hierarchy = c.get("hierarchy", "");
    e.valid_labels = c.get("valid_labels", "");
    e.normalize = c.get_bool("normalize", e.normalize);

    e.loss = c.get("loss", e.loss);
    if (e.loss != "ovo" && e.loss != "cs" && e.loss != "cs_struct")
        fail(ErrorKind::Config, "loss must be ovo, cs or cs_struct");
    e.lambda = c.get_double("lambda", e.lambda);
    e.sigma = c.get_double("sigma", e.sigma);
    e.max_iters = static_cast<int>(c.get_int("max_iters", e.max_iters));
    e.grad_tol = c.get_double("grad_tol", e.grad_tol);

    e.cv = c.get_bool("cv", e.cv);
    e.cv_folds = static_cast<int>(c.get_int("cv.folds", e.cv_folds));
    const std::string mode = c.get("cv.mode", "classwise");
    if (mode != "classwise" && mode != "samplewise") fail(ErrorKind::Config, "cv.mode must be classwise or samplewise");
    e.cv_mode = mode == "classwise" ? FoldMode::ClassWise : FoldMode::SampleWise;
    e.grid.lambda_values = c.get_doubles("grid.lambda", e.grid.lambda_values);
    e.grid.sigma_values = c.get_doubles("grid.sigma", e.grid.sigma_values);
    e.grid.eta_values = c.get_doubles("grid.eta", e.grid.eta_values);
    e.grid.gamma_values = c.get_doubles("grid.gamma", e.grid.gamma_values);
    {
        std::vector<double> ts(e.grid.conse_T_values.begin(), e.grid.conse_T_values.end());
        ts = c.get_doubles("grid.T", ts);
        e.grid.conse_T_values.clear();
        for (double t : ts) e.grid.conse_T_values.push_back(static_cast<int>(t));
    }

    e.learn_phantoms = c.get_bool("learn_phantoms", e.learn_phantoms);
    e.eta = c.get_double("eta", e.eta);
    e.gamma = c.get_double("gamma", e.gamma);
    e.h = c.get_double("h", e.h);
    e.outer_rounds = static_cast<int>(c.get_int("outer_rounds", e.outer_rounds));
    e.beta_iters = static_cast<int>(c.get_int("beta_iters", e.beta_iters));
    e.num_phantom = static_cast<Index>(c.get_int("num_phantom", e.num_phantom));
    e.init = c.get("init", e.init);
    if (e.init != "auto") parse_init_strategy(e.init);

    e.metric = c.get("metric", e.metric);
    if (e.metric != "scaled" && e.metric != "learned") fail(ErrorKind::Config, "metric must be scaled or learned");
    e.metric_gamma = c.get_double("metric.gamma", e.metric_gamma);
    e.metric_sigma0 = c.get_double("metric.sigma0", e.metric_sigma0);
    e.metric_rounds = static_cast<int>(c.get_int("metric.rounds", e.metric_rounds));

    e.conse_T = static_cast<int>(c.get_int("conse.T", e.conse_T));
    e.conse_l2 = c.get_double("conse.l2", e.conse_l2);

    {
        std::vector<double> ks(e.topk.begin(), e.topk.end());
        ks = c.get_doubles("topk", ks);
        e.topk.clear();
        for (double k : ks) e.topk.push_back(static_cast<Index>(k));
    }
    e.sweep_ratios = c.get_doubles("sweep.ratios", e.sweep_ratios);
    e.models = c.get("models", "");
    e.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
    e.synth.seed = substream_seed(e.seed, "data");
    e.output_dir = c.get("output_dir", "");

    if (e.num_phantom < 0) fail(ErrorKind::Config, "num_phantom must be >= 0");
    if (e.cv_folds < 2) fail(ErrorKind::Config, "cv.folds must be >= 2");
    for (Index k : e.topk)
        if (k < 1) fail(ErrorKind::Config, "topk entries must be >= 1");
    return e;
}

Config ExperimentConfig::to_config() const {
    Config c;
    c.set("data", synthetic ? "synthetic" : "files");
    c.set("synth.seen", std::to_string(synth.seen));
    c.set("synth.unseen", std::to_string(synth.unseen));
    c.set("synth.feature_dim", std::to_string(synth.feature_dim));
    c.set("synth.embed_dim", std::to_string(synth.embed_dim));
    c.set("synth.samples_per_class", std::to_string(synth.samples_per_class));
    c.set("synth.noise_std", fmt_double(synth.noise_std));
    c.set("synth.margin", fmt_double(synth.margin));
    auto set_path = [&](const char* k, const std::string& v) {
        if (!v.empty()) c.set(k, v);
    };
    set_path("features", features);
    set_path("labels", labels);
    set_path("test_features", test_features);
    set_path("test_labels", test_labels);
    set_path("embeddings", embeddings);
    set_path("split", split);
    set_path("seen_embeddings", seen_embeddings);
    set_path("unseen_embeddings", unseen_embeddings);
    set_path("hierarchy", hierarchy);
    set_path("valid_labels", valid_labels);
    set_path("models", models);
    set_path("output_dir", output_dir);
    c.set("normalize", normalize ? "true" : "false");
    c.set("loss", loss);
    c.set("lambda", fmt_double(lambda));
    c.set("sigma", fmt_double(sigma));
    c.set("max_iters", std::to_string(max_iters));
    c.set("grad_tol", fmt_double(grad_tol));
    c.set("cv", cv ? "true" : "false");
    c.set("cv.folds", std::to_string(cv_folds));
    c.set("cv.mode", std::string(to_string(cv_mode)));
    c.set("grid.lambda", join(grid.lambda_values));
    c.set("grid.sigma", join(grid.sigma_values));
    c.set("grid.eta", join(grid.eta_values));
    c.set("grid.gamma", join(grid.gamma_values));
    c.set("grid.T", join(grid.conse_T_values));
    c.set("learn_phantoms", learn_phantoms ? "true" : "false");
    c.set("eta", fmt_double(eta));
    c.set("gamma", fmt_double(gamma));
    c.set("h", fmt_double(h));
    c.set("outer_rounds", std::to_string(outer_rounds));
    c.set("beta_iters", std::to_string(beta_iters));
    c.set("num_phantom", std::to_string(num_phantom));
    c.set("init", init);
    c.set("metric", metric);
    c.set("metric.gamma", fmt_double(metric_gamma));
    c.set("metric.sigma0", fmt_double(metric_sigma0));
    c.set("metric.rounds", std::to_string(metric_rounds));
    c.set("conse.T", std::to_string(conse_T));
    c.set("conse.l2", fmt_double(conse_l2));
    c.set("topk", join(topk));
    c.set("sweep.ratios", join(sweep_ratios));
    c.set("seed", std::to_string(seed));
    return c;
}

TrainConfig ExperimentConfig::train_config() const {
    TrainConfig t;
    t.lambda = lambda;
    t.max_iters = max_iters;
    t.grad_tol = grad_tol;
    t.seed = seed;
    return t;
}

LossKind ExperimentConfig::loss_kind(const EmbeddingTable& seen) const {
    if (loss == "cs") return CrammerSinger{};
    if (loss == "cs_struct") return CrammerSingerStruct{seen};
    return OneVsOther{};
}

namespace {

LabeledDataset labeled_from_files(const std::string& features, const std::string& labels, const EmbeddingTable& classes) {
    LabeledDataset ds;
    ds.features = load_matrix(features);
    const auto ids = load_labels(labels);
    if (static_cast<Index>(ids.size()) != ds.features.rows())
        fail(ErrorKind::Config, labels + ": " + std::to_string(ids.size()) + " labels for " +
                                    std::to_string(ds.features.rows()) + " feature rows");
    ds.num_classes = static_cast<int>(classes.size());
    for (const auto& id : ids) {
        const Index i = classes.index_of(id);
        if (i < 0) fail(ErrorKind::Config, labels + ": class '" + id + "' has no embedding in this split");
        ds.labels.push_back(static_cast<int>(i));
    }
    return ds;
}

EmbeddingTable pick(const EmbeddingTable& all, const std::vector<std::string>& ids, const std::string& what) {
    std::vector<Index> rows;
    for (const auto& id : ids) {
        const Index i = all.index_of(id);
        if (i < 0) fail(ErrorKind::Config, what + " class '" + id + "' missing from embeddings");
        rows.push_back(i);
    }
    return all.select(rows);
}

} // namespace

Problem load_problem(const ExperimentConfig& cfg) {
    Problem p;
    if (cfg.synthetic) {
        SyntheticData d = generate_synthetic(cfg.synth);
        p.seen_train = std::move(d.seen_train);
        p.unseen_test = std::move(d.unseen_test);
        p.seen = std::move(d.seen_embeddings);
        p.unseen = std::move(d.unseen_embeddings);
        return p;
    }
    if (!cfg.embeddings.empty()) {
        if (cfg.split.empty()) fail(ErrorKind::Config, "`embeddings` requires a `split` file");
        const EmbeddingTable all = load_embeddings(cfg.embeddings, cfg.normalize);
        const ClassSplit split = load_split(cfg.split);
        p.seen = pick(all, split.seen, "seen");
        p.unseen = pick(all, split.unseen, "unseen");
    } else {
        if (cfg.seen_embeddings.empty() || cfg.unseen_embeddings.empty())
            fail(ErrorKind::Config, "need `embeddings` + `split`, or `seen_embeddings` + `unseen_embeddings`");
        p.seen = load_embeddings(cfg.seen_embeddings, cfg.normalize);
        p.unseen = load_embeddings(cfg.unseen_embeddings, cfg.normalize);
    }
    if (cfg.features.empty() || cfg.labels.empty()) fail(ErrorKind::Config, "`features` and `labels` are required");
    p.seen_train = labeled_from_files(cfg.features, cfg.labels, p.seen);
    if (!cfg.test_features.empty()) {
        if (cfg.test_labels.empty()) fail(ErrorKind::Config, "`test_features` requires `test_labels`");
        p.unseen_test = labeled_from_files(cfg.test_features, cfg.test_labels, p.unseen);
    }
    return p;
}

InitStrategy resolve_init(const std::string& name, Index num_phantom, Index num_seen) {
    if (name != "auto") return parse_init_strategy(name);
    if (num_phantom == num_seen) return InitStrategy::Identity;
    return num_phantom < num_seen ? InitStrategy::KMeansCentroids : InitStrategy::Mixed;
}

TrainOutcome train_stage(const Problem& p, const ExperimentConfig& cfg, double lambda, double sigma, double eta,
                         double gamma) {
    const Index num_seen = p.seen.size();
    const Index num_phantom = cfg.num_phantom > 0 ? cfg.num_phantom : num_seen;
    const InitStrategy init = resolve_init(cfg.init, num_phantom, num_seen);
    TrainConfig tc = cfg.train_config();
    tc.lambda = lambda;

    TrainOutcome out;
    out.metric = Metric::scaled_identity(sigma);
    if (cfg.learn_phantoms) {
        PhantomConfig pc;
        pc.eta = eta;
        pc.gamma = gamma;
        pc.h = cfg.h;
        pc.outer_rounds = cfg.outer_rounds;
        pc.init = init;
        pc.num_phantom = num_phantom;
        pc.seed = substream_seed(cfg.seed, "init");
        pc.beta_iters = cfg.beta_iters;
        PhantomResult r = learn_phantom_embeddings(p.seen_train, p.seen, pc, tc, lambda, out.metric);
        out.phantom = phantom_embeddings_from_beta(r.beta, p.seen);
        out.bases = std::move(r.bases);
        out.beta = std::move(r.beta);
        out.phantom_trace = std::move(r.objective_trace);
        return out;
    }
    if (cfg.metric == "learned") {
        if (num_phantom != num_seen) fail(ErrorKind::Config, "metric learning requires num_phantom == number of seen classes");
        MetricLearnConfig mc;
        mc.gamma_m = cfg.metric_gamma;
        mc.sigma0 = cfg.metric_sigma0;
        mc.folds = cfg.cv_folds;
        mc.outer_rounds = cfg.metric_rounds;
        mc.seed = substream_seed(cfg.seed, "folds");
        MetricResult r = learn_metric(p.seen_train, p.seen, p.seen, mc, tc, lambda);
        out.metric = r.metric;
        out.bases = std::move(r.bases);
        out.phantom = p.seen;
        return out;
    }
    BetaMatrix beta = init_phantoms(init, p.seen, num_phantom, substream_seed(cfg.seed, "init"));
    out.phantom = init == InitStrategy::Identity ? p.seen : phantom_embeddings_from_beta(beta, p.seen);
    out.beta = std::move(beta);
    const SimilarityMatrix sim = similarity_weights(p.seen, out.phantom, out.metric);
    TrainResult tr = train_base_classifiers(p.seen_train, sim, cfg.loss_kind(p.seen), tc);
    out.bases = std::move(tr.bases);
    out.report = tr.report;
    return out;
}

namespace {

std::vector<Index> truths_of(const LabeledDataset& d) { return {d.labels.begin(), d.labels.end()}; }

EvalReport evaluate_unseen(const Problem& p, const ExperimentConfig& cfg, const Matrix& scores) {
    if (p.unseen_test.size() == 0) fail(ErrorKind::Config, "no unseen test data to evaluate");
    const auto truths = truths_of(p.unseen_test);
    if (cfg.hierarchy.empty()) return evaluate_scores(scores, truths, p.unseen.class_ids(), cfg.topk);
    if (cfg.valid_labels.empty()) fail(ErrorKind::Config, "`hierarchy` requires `valid_labels`");
    const Hierarchy h = load_hierarchy(cfg.hierarchy, cfg.valid_labels);
    std::vector<Index> nodes;
    for (const auto& id : p.unseen.class_ids()) {
        const Index n = h.index_of(id);
        if (n < 0) fail(ErrorKind::Config, "unseen class '" + id + "' is not in the hierarchy");
        nodes.push_back(n);
    }
    return evaluate_scores(scores, truths, p.unseen.class_ids(), cfg.topk, &h, nodes);
}

} // namespace

ZeroShotResult run_zero_shot(const Problem& p, const ExperimentConfig& cfg) {
    ZeroShotResult out;
    out.chosen = {cfg.lambda, cfg.sigma, cfg.eta, cfg.gamma, cfg.conse_T};
    if (cfg.cv) {
        const FoldPlan plan = make_folds(p.seen_train.labels, cfg.cv_folds, cfg.cv_mode, substream_seed(cfg.seed, "folds"));
        CvSettings st;
        st.stage = CvStage::LambdaSigma;
        st.loss = cfg.loss_kind(p.seen);
        st.train = cfg.train_config();
        out.cv_stage1 = cross_validate(p.seen_train, p.seen, cfg.grid, plan, st);
        out.chosen.lambda = out.cv_stage1->best.lambda;
        out.chosen.sigma = out.cv_stage1->best.sigma;
        if (cfg.learn_phantoms) {
            st.stage = CvStage::EtaGamma;
            st.frozen = out.chosen;
            st.phantom.h = cfg.h;
            st.phantom.outer_rounds = cfg.outer_rounds;
            st.phantom.beta_iters = cfg.beta_iters;
            out.cv_stage2 = cross_validate(p.seen_train, p.seen, cfg.grid, plan, st);
            out.chosen.eta = out.cv_stage2->best.eta;
            out.chosen.gamma = out.cv_stage2->best.gamma;
        }
    }
    out.trained = train_stage(p, cfg, out.chosen.lambda, out.chosen.sigma, out.chosen.eta, out.chosen.gamma);
    out.unseen_similarity = similarity_weights(p.unseen, out.trained.phantom, out.trained.metric);
    out.unseen_models = synthesize(out.unseen_similarity, out.trained.bases);
    out.report = evaluate_unseen(p, cfg, decision_values(out.unseen_models, p.unseen_test.features));
    return out;
}

namespace {

std::string in_dir(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void write_metric(const std::string& path, const Metric& m, Index dim) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot write " + path);
    if (const auto* s = std::get_if<ScaledIdentity>(&m.variant())) {
        os << "scaled_identity " << fmt_double(s->sigma) << '\n';
    } else {
        os << "diagonal\n";
        write_matrix(os, m.weights(dim).cwiseSqrt().transpose());
    }
}

} // namespace

ZeroShotResult run_zero_shot(const ExperimentConfig& cfg) {
    const Problem p = load_problem(cfg);
    ZeroShotResult r = run_zero_shot(p, cfg);
    if (cfg.output_dir.empty()) return r;

    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::string> outputs;
    auto out_file = [&](const std::string& name) {
        outputs.push_back(name);
        return in_dir(cfg.output_dir, name);
    };
    {
        std::ofstream os(out_file("report.tsv"));
        write_eval_report(os, r.report);
    }
    if (r.cv_stage1) {
        std::ofstream os(out_file("cv_stage1.tsv"));
        write_cv_report(os, *r.cv_stage1);
    }
    if (r.cv_stage2) {
        std::ofstream os(out_file("cv_stage2.tsv"));
        write_cv_report(os, *r.cv_stage2);
    }
    save_matrix(out_file("bases.mat"), r.trained.bases.vectors);
    save_embeddings(out_file("phantoms.emb"), r.trained.phantom.class_ids(), r.trained.phantom.vectors());
    if (r.trained.beta) save_matrix(out_file("beta.mat"), r.trained.beta->coeffs);
    write_metric(out_file("metric.txt"), r.trained.metric, p.seen.dim());
    save_matrix(out_file("unseen_similarity.mat"), r.unseen_similarity.weights);
    save_embeddings(out_file("unseen_classifiers.emb"), r.unseen_models.class_ids, r.unseen_models.vectors);
    write_manifest(cfg.output_dir, cfg, outputs);
    return r;
}

std::vector<SweepRow> sweep_phantom_count(const Problem& p, const ExperimentConfig& cfg, const std::vector<double>& ratios) {
    const Index num_seen = p.seen.size();
    for (double r : ratios)
        if (!(r > 0.0 && r <= 2.0)) fail(ErrorKind::Config, "sweep ratios must lie in (0, 2]");

    ExperimentConfig base = cfg;
    base.num_phantom = num_seen;
    base.init = "auto";
    base.learn_phantoms = false;
    base.metric = "scaled";
    const ZeroShotResult reference = run_zero_shot(p, base);
    base.cv = false;
    base.lambda = reference.chosen.lambda;
    base.sigma = reference.chosen.sigma;
    const double ref_acc = reference.report.per_class_accuracy;

    std::vector<SweepRow> rows;
    for (double ratio : ratios) {
        SweepRow row;
        row.ratio = ratio;
        row.num_phantom = std::max<Index>(1, static_cast<Index>(std::llround(ratio * static_cast<double>(num_seen))));
        if (row.num_phantom == num_seen) {
            row.accuracy = ref_acc;
        } else {
            ExperimentConfig c = base;
            c.num_phantom = row.num_phantom;
            row.accuracy = run_zero_shot(p, c).report.per_class_accuracy;
        }
        row.relative = ref_acc > 0.0 ? row.accuracy / ref_acc : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SweepRow> sweep_phantom_count(const ExperimentConfig& cfg, const std::vector<double>& ratios) {
    const Problem p = load_problem(cfg);
    auto rows = sweep_phantom_count(p, cfg, ratios);
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        {
            std::ofstream os(in_dir(cfg.output_dir, "sweep.tsv"));
            write_sweep(os, rows);
        }
        write_manifest(cfg.output_dir, cfg, {"sweep.tsv"});
    }
    return rows;
}

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "ratio\tnum_phantom\taccuracy\trelative\n";
    for (const auto& r : rows)
        os << fmt_double(r.ratio) << '\t' << r.num_phantom << '\t' << fmt_double(r.accuracy) << '\t'
           << fmt_double(r.relative) << '\n';
}

ConseResult run_conse(const Problem& p, const ExperimentConfig& cfg) {
    ConseResult out;
    out.T = cfg.conse_T;
    if (cfg.cv) {
        const FoldPlan plan = make_folds(p.seen_train.labels, cfg.cv_folds, FoldMode::ClassWise, substream_seed(cfg.seed, "folds"));
        CvSettings st;
        st.stage = CvStage::ConseT;
        st.train = cfg.train_config();
        st.conse_l2 = cfg.conse_l2;
        out.cv = cross_validate(p.seen_train, p.seen, cfg.grid, plan, st);
        out.T = out.cv->best.T;
    }
    out.fit = train_seen_probabilistic(p.seen_train, cfg.conse_l2, cfg.train_config());
    out.T = std::clamp(out.T, 1, static_cast<int>(p.seen.size()));
    const Matrix scores = conse_scores(p.unseen_test.features, out.fit.model, p.seen, p.unseen, out.T);
    out.report = evaluate_unseen(p, cfg, scores);
    return out;
}

void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::vector<std::string>& outputs) {
    const std::string path = in_dir(dir, "manifest.txt");
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot write " + path);
    os << "# phantom-sync " << kVersion << " run manifest; usable as --config to reproduce\n";
    os << "# seed " << cfg.seed << '\n';
    cfg.to_config().write(os);
    for (const auto& name : outputs) os << "# output " << name << " fnv1a64=" << file_digest(in_dir(dir, name)) << '\n';
}

} // namespace phantom
