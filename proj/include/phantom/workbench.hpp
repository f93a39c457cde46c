#pragma once

#include "phantom/adaptation.hpp"
#include "phantom/conse.hpp"
#include "phantom/evaluation.hpp"
#include "phantom/model_selection.hpp"
#include "phantom/synthetic.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phantom {

// Flat `key = value` configuration; `#` starts a comment line.
class Config {
public:
    static Config load(const std::string& path);
    static Config parse(std::istream& in, const std::string& source = "<config>");

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.contains(key); }
    const std::map<std::string, std::string>& entries() const noexcept { return kv_; }

    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    void write(std::ostream& os) const;

private:
    std::map<std::string, std::string> kv_;
};

struct ExperimentConfig {
    // Data. With `data = synthetic` the synth.* keys generate the problem;
    // otherwise the file paths are read.
    bool synthetic = true;
    SyntheticSpec synth;
    std::string features, labels, test_features, test_labels;
    std::string embeddings, split, seen_embeddings, unseen_embeddings;
    std::string hierarchy, valid_labels;
    bool normalize = true;

    std::string loss = "ovo"; // ovo | cs | cs_struct
    double lambda = 1.0;
    double sigma = 1.0;
    int max_iters = 150;
    double grad_tol = 1e-6;

    bool cv = true;
    int cv_folds = 5;
    FoldMode cv_mode = FoldMode::ClassWise;
    HyperGrid grid = HyperGrid::defaults();

    bool learn_phantoms = false;
    double eta = 0.0;
    double gamma = 0.0;
    double h = 1.0;
    int outer_rounds = 3;
    int beta_iters = 50;

    Index num_phantom = 0;     // 0 = number of seen classes
    std::string init = "auto"; // auto | identity | random_subset | kmeans | mixed

    std::string metric = "scaled"; // scaled | learned
    double metric_gamma = 1.0;
    double metric_sigma0 = 1.0;
    int metric_rounds = 3;

    int conse_T = 10;
    double conse_l2 = 1.0;

    std::vector<Index> topk = {1, 2, 5};
    std::vector<double> sweep_ratios = {0.2, 0.4, 0.6, 0.8, 1.0};
    std::string models; // classifier file for `eval`

    std::uint64_t seed = 0;
    std::string output_dir;

    static ExperimentConfig from(const Config& cfg);
    // Every field as a key, so the echo fully determines a rerun.
    Config to_config() const;

    TrainConfig train_config() const;
    LossKind loss_kind(const EmbeddingTable& seen) const;
};

struct Problem {
    LabeledDataset seen_train;
    LabeledDataset unseen_test;
    EmbeddingTable seen;
    EmbeddingTable unseen;
};

Problem load_problem(const ExperimentConfig& cfg);

// `auto` resolves to identity at R == S, k-means below, identity + random
// combinations above.
InitStrategy resolve_init(const std::string& name, Index num_phantom, Index num_seen);

struct TrainOutcome {
    BaseClassifierSet bases;
    EmbeddingTable phantom;
    std::optional<BetaMatrix> beta;
    Metric metric = Metric::scaled_identity(1.0);
    DescentReport report;
    std::vector<double> phantom_trace;
};

// Builds the phantom table and learns V on the seen data with the given
// lambda/sigma (phantom learning and metric learning per config).
TrainOutcome train_stage(const Problem& p, const ExperimentConfig& cfg, double lambda, double sigma, double eta,
                         double gamma);

struct ZeroShotResult {
    CvCell chosen;
    std::optional<CvResult> cv_stage1;
    std::optional<CvResult> cv_stage2;
    TrainOutcome trained;
    SimilarityMatrix unseen_similarity;
    ClassifierSet unseen_models;
    EvalReport report;
};

// CV (optional) -> phantoms -> V on seen data -> unseen similarities ->
// synthesized unseen classifiers -> evaluation on unseen test data.
ZeroShotResult run_zero_shot(const Problem& p, const ExperimentConfig& cfg);
// Loads the problem, runs, and writes every output plus a manifest when
// output_dir is set.
ZeroShotResult run_zero_shot(const ExperimentConfig& cfg);

struct SweepRow {
    double ratio = 0.0;
    Index num_phantom = 0;
    double accuracy = 0.0;
    double relative = 0.0; // accuracy / accuracy at R = S
};

std::vector<SweepRow> sweep_phantom_count(const Problem& p, const ExperimentConfig& cfg, const std::vector<double>& ratios);
std::vector<SweepRow> sweep_phantom_count(const ExperimentConfig& cfg, const std::vector<double>& ratios);
void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows);

struct ConseResult {
    int T = 1;
    std::optional<CvResult> cv;
    ProbabilisticFit fit;
    EvalReport report;
};

ConseResult run_conse(const Problem& p, const ExperimentConfig& cfg);

struct OutputFile {
    std::string name;
    std::string digest;
};

// Writes `manifest.txt`: the resolved config as key = value lines followed by
// one `# output <file> fnv1a64=<hex>` comment per produced file.
void write_manifest(const std::string& dir, const ExperimentConfig& cfg, const std::vector<std::string>& outputs);

inline constexpr const char* kVersion = "0.1.0";

} // namespace phantom
