#include "phantom/model_selection.hpp"

#include "phantom/conse.hpp"
#include "phantom/evaluation.hpp"
#include "phantom/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace phantom {

std::string_view to_string(FoldMode m) { return m == FoldMode::ClassWise ? "classwise" : "samplewise"; }

FoldPlan make_folds(std::span<const int> labels, int k, FoldMode mode, std::uint64_t seed) {
    if (k < 2) fail(ErrorKind::InvalidArgument, "cross-validation needs k >= 2 folds");
    if (labels.empty()) fail(ErrorKind::InvalidArgument, "no samples to split");
    Rng rng = make_rng(seed, "folds");

    std::map<int, std::vector<Index>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<Index>(i));

    std::vector<int> fold_of(labels.size(), -1);
    if (mode == FoldMode::ClassWise) {
        if (static_cast<int>(by_class.size()) < k)
            fail(ErrorKind::TooFewClasses, std::to_string(by_class.size()) + " classes cannot fill " +
                                               std::to_string(k) + " class-disjoint folds");
        std::vector<int> classes;
        for (const auto& [c, _] : by_class) classes.push_back(c);
        shuffle(classes.begin(), classes.end(), rng);
        for (std::size_t i = 0; i < classes.size(); ++i)
            for (Index n : by_class[classes[i]]) fold_of[n] = static_cast<int>(i % static_cast<std::size_t>(k));
    } else {
        std::size_t next = 0;
        for (auto& [c, rows] : by_class) {
            shuffle(rows.begin(), rows.end(), rng);
            for (Index n : rows) fold_of[n] = static_cast<int>(next++ % static_cast<std::size_t>(k));
        }
    }

    FoldPlan plan;
    plan.mode = mode;
    plan.seed = seed;
    plan.folds.resize(static_cast<std::size_t>(k));
    for (std::size_t n = 0; n < labels.size(); ++n)
        for (int f = 0; f < k; ++f)
            (fold_of[n] == f ? plan.folds[f].validation : plan.folds[f].train).push_back(static_cast<Index>(n));
    return plan;
}

HyperGrid HyperGrid::defaults() {
    auto log_space = [](double lo, double hi, int count) {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) v.push_back(std::pow(2.0, lo + (hi - lo) * i / (count - 1)));
        return v;
    };
    HyperGrid g;
    g.lambda_values = log_space(-10.0, 4.0, 8);
    g.sigma_values = log_space(-5.0, 5.0, 8);
    g.eta_values = {1e-3, 1e-2, 1e-1, 1e0, 1e1};
    g.gamma_values = {1e-3, 1e-2, 1e-1, 1e0, 1e1};
    g.conse_T_values = {1, 2, 5, 10};
    return g;
}

std::vector<CvCell> grid_cells(const HyperGrid& grid, CvStage stage, const CvCell& frozen) {
    std::vector<CvCell> cells;
    auto need = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::Config, std::string("empty grid: ") + what);
    };
    switch (stage) {
    case CvStage::LambdaSigma:
        need(!grid.lambda_values.empty() && !grid.sigma_values.empty(), "lambda/sigma");
        for (double l : grid.lambda_values)
            for (double s : grid.sigma_values) cells.push_back({l, s, 0.0, 0.0, frozen.T});
        break;
    case CvStage::EtaGamma:
        need(!grid.eta_values.empty() && !grid.gamma_values.empty(), "eta/gamma");
        for (double e : grid.eta_values)
            for (double g : grid.gamma_values) cells.push_back({frozen.lambda, frozen.sigma, e, g, frozen.T});
        break;
    case CvStage::ConseT:
        need(!grid.conse_T_values.empty(), "conse T");
        for (int t : grid.conse_T_values) cells.push_back({frozen.lambda, frozen.sigma, 0.0, 0.0, t});
        break;
    }
    return cells;
}

namespace {

struct FoldView {
    std::vector<int> train_classes;
    std::vector<int> candidates; // label space competing at validation
    LabeledDataset train;        // labels remapped into train_classes
    Matrix val_features;
    std::vector<Index> val_truths; // positions in candidates
};

std::vector<Index> as_index(const std::vector<int>& v) { return {v.begin(), v.end()}; }

FoldView view_fold(const LabeledDataset& data, const Fold& fold, FoldMode mode) {
    FoldView fv;
    std::set<int> tr, va;
    for (Index n : fold.train) tr.insert(data.labels[n]);
    for (Index n : fold.validation) va.insert(data.labels[n]);
    if (tr.empty() || va.empty()) fail(ErrorKind::InvalidArgument, "fold has an empty side");
    fv.train_classes.assign(tr.begin(), tr.end());
    if (mode == FoldMode::ClassWise) {
        fv.candidates.assign(va.begin(), va.end());
    } else {
        std::set<int> all = tr;
        all.insert(va.begin(), va.end());
        fv.candidates.assign(all.begin(), all.end());
    }
    std::map<int, int> remap;
    for (std::size_t i = 0; i < fv.train_classes.size(); ++i) remap[fv.train_classes[i]] = static_cast<int>(i);
    fv.train = data.subset(fold.train);
    for (int& y : fv.train.labels) y = remap.at(y);
    fv.train.num_classes = static_cast<int>(fv.train_classes.size());

    fv.val_features.resize(static_cast<Index>(fold.validation.size()), data.dim());
    for (std::size_t i = 0; i < fold.validation.size(); ++i) {
        const Index n = fold.validation[i];
        fv.val_features.row(static_cast<Index>(i)) = data.features.row(n);
        const auto it = std::lower_bound(fv.candidates.begin(), fv.candidates.end(), data.labels[n]);
        fv.val_truths.push_back(it - fv.candidates.begin());
    }
    return fv;
}

double score_view(const FoldView& fv, const Matrix& scores) {
    std::vector<Index> preds(static_cast<std::size_t>(scores.rows()));
    for (Index n = 0; n < scores.rows(); ++n) preds[n] = argmax_row(scores, n);
    return per_class_accuracy(preds, fv.val_truths, static_cast<Index>(fv.candidates.size()));
}

double score_synthesis(const FoldView& fv, const EmbeddingTable& seen, const CvCell& cell, const CvSettings& settings) {
    const EmbeddingTable seen_fold = seen.select(as_index(fv.train_classes));
    const Metric metric = Metric::scaled_identity(cell.sigma);
    TrainConfig tc = settings.train;
    tc.lambda = cell.lambda;

    BaseClassifierSet bases;
    EmbeddingTable phantom;
    if (settings.stage == CvStage::EtaGamma) {
        PhantomConfig pc = settings.phantom;
        pc.eta = cell.eta;
        pc.gamma = cell.gamma;
        pc.init = InitStrategy::Identity;
        pc.num_phantom = 0;
        PhantomResult pr = learn_phantom_embeddings(fv.train, seen_fold, pc, tc, cell.lambda, metric);
        phantom = phantom_embeddings_from_beta(pr.beta, seen_fold);
        bases = std::move(pr.bases);
    } else {
        LossKind loss = settings.loss;
        if (std::holds_alternative<CrammerSingerStruct>(loss)) loss = CrammerSingerStruct{seen_fold};
        phantom = seen_fold;
        const SimilarityMatrix sim = similarity_weights(seen_fold, phantom, metric);
        bases = train_base_classifiers(fv.train, sim, loss, tc).bases;
    }
    const SimilarityMatrix target = similarity_weights(seen.select(as_index(fv.candidates)), phantom, metric);
    const ClassifierSet models = synthesize(target, bases);
    return score_view(fv, decision_values(models, fv.val_features));
}

} // namespace

double score_fold(const LabeledDataset& data, const EmbeddingTable& seen, const Fold& fold, FoldMode mode,
                  const CvCell& cell, const CvSettings& settings) {
    const FoldView fv = view_fold(data, fold, mode);
    if (settings.stage == CvStage::ConseT) {
        const ProbabilisticFit fit = train_seen_probabilistic(fv.train, settings.conse_l2, settings.train);
        const EmbeddingTable seen_fold = seen.select(as_index(fv.train_classes));
        const int t = std::min(cell.T, static_cast<int>(fv.train_classes.size()));
        return score_view(fv, conse_scores(fv.val_features, fit.model, seen_fold,
                                           seen.select(as_index(fv.candidates)), t));
    }
    return score_synthesis(fv, seen, cell, settings);
}

CvResult cross_validate(const LabeledDataset& data, const EmbeddingTable& seen, const HyperGrid& grid,
                        const FoldPlan& plan, const CvSettings& settings) {
    data.validate();
    require_shape(seen.size() == data.num_classes, "seen embeddings must cover every training class");
    if (plan.folds.empty()) fail(ErrorKind::InvalidArgument, "empty fold plan");

    CvResult out;
    out.stage = settings.stage;
    const std::vector<CvCell> cells = grid_cells(grid, settings.stage, settings.frozen);
    out.cells.resize(cells.size());
    const std::size_t nfolds = plan.folds.size();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out.cells[i].cell = cells[i];
        out.cells[i].fold_scores.assign(nfolds, -std::numeric_limits<double>::infinity());
    }

    if (settings.stage == CvStage::ConseT) {
        // The logistic model does not depend on T: fit once per fold.
        for (std::size_t f = 0; f < nfolds; ++f) {
            try {
                const FoldView fv = view_fold(data, plan.folds[f], plan.mode);
                const ProbabilisticFit fit = train_seen_probabilistic(fv.train, settings.conse_l2, settings.train);
                const EmbeddingTable seen_fold = seen.select(as_index(fv.train_classes));
                const EmbeddingTable cand = seen.select(as_index(fv.candidates));
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    const int t = std::min(cells[i].T, static_cast<int>(fv.train_classes.size()));
                    out.cells[i].fold_scores[f] = score_view(fv, conse_scores(fv.val_features, fit.model, seen_fold, cand, t));
                }
            } catch (const std::exception& e) {
                for (auto& c : out.cells) {
                    c.failed = true;
                    c.error = e.what();
                }
            }
        }
    } else {
        const Index jobs = static_cast<Index>(cells.size() * nfolds);
#pragma omp parallel for schedule(dynamic)
        for (Index j = 0; j < jobs; ++j) {
            const std::size_t i = static_cast<std::size_t>(j) / nfolds, f = static_cast<std::size_t>(j) % nfolds;
            try {
                out.cells[i].fold_scores[f] = score_fold(data, seen, plan.folds[f], plan.mode, cells[i], settings);
            } catch (const std::exception& e) {
#pragma omp critical(cv_failure)
                {
                    out.cells[i].failed = true;
                    if (out.cells[i].error.empty()) out.cells[i].error = e.what();
                }
            }
        }
    }

    for (auto& c : out.cells) {
        if (c.failed) {
            c.mean = -std::numeric_limits<double>::infinity();
            continue;
        }
        c.mean = std::accumulate(c.fold_scores.begin(), c.fold_scores.end(), 0.0) / static_cast<double>(nfolds);
    }
    for (std::size_t i = 1; i < out.cells.size(); ++i)
        if (out.cells[i].mean > out.cells[out.best_index].mean) out.best_index = i;
    out.best = out.cells[out.best_index].cell;
    return out;
}

void write_cv_report(std::ostream& os, const CvResult& result) {
    const auto old = os.precision(17);
    const std::size_t nfolds = result.cells.empty() ? 0 : result.cells.front().fold_scores.size();
    os << "lambda\tsigma\teta\tgamma\tT";
    for (std::size_t f = 0; f < nfolds; ++f) os << "\tfold_" << f;
    os << "\tmean\tstatus\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const auto& c = result.cells[i];
        os << c.cell.lambda << '\t' << c.cell.sigma << '\t' << c.cell.eta << '\t' << c.cell.gamma << '\t' << c.cell.T;
        for (double s : c.fold_scores) os << '\t' << s;
        os << '\t' << c.mean << '\t' << (c.failed ? "failed" : (i == result.best_index ? "best" : "ok")) << '\n';
    }
    os.precision(old);
}

} // namespace phantom
