#include "phantom/adaptation.hpp"

#include "phantom/model_selection.hpp"
#include "phantom/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace phantom {

std::string_view to_string(InitStrategy s) {
    switch (s) {
    case InitStrategy::Identity: return "identity";
    case InitStrategy::RandomSubset: return "random_subset";
    case InitStrategy::KMeansCentroids: return "kmeans";
    case InitStrategy::Mixed: return "mixed";
    }
    return "unknown";
}

InitStrategy parse_init_strategy(std::string_view s) {
    if (s == "identity") return InitStrategy::Identity;
    if (s == "random_subset") return InitStrategy::RandomSubset;
    if (s == "kmeans") return InitStrategy::KMeansCentroids;
    if (s == "mixed") return InitStrategy::Mixed;
    fail(ErrorKind::Config, "unknown init strategy '" + std::string(s) + "'");
}

void PhantomConfig::validate() const {
    if (!(eta >= 0.0) || !(gamma >= 0.0)) fail(ErrorKind::InvalidArgument, "eta and gamma must be >= 0");
    if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "h must be > 0");
    if (outer_rounds < 1) fail(ErrorKind::InvalidArgument, "outer_rounds must be >= 1");
    if (num_phantom < 0) fail(ErrorKind::InvalidArgument, "num_phantom must be >= 0");
}

void MetricLearnConfig::validate() const {
    if (!(gamma_m >= 0.0)) fail(ErrorKind::InvalidArgument, "gamma_m must be >= 0");
    if (!(sigma0 > 0.0)) fail(ErrorKind::InvalidArgument, "sigma0 must be > 0");
    if (folds < 2) fail(ErrorKind::InvalidArgument, "metric learning needs at least 2 folds");
    if (outer_rounds < 0) fail(ErrorKind::InvalidArgument, "outer_rounds must be >= 0");
}

EmbeddingTable phantom_embeddings_from_beta(const BetaMatrix& beta, const EmbeddingTable& seen) {
    require_shape(beta.coeffs.cols() == seen.size(),
                  "beta has " + std::to_string(beta.coeffs.cols()) + " columns for " + std::to_string(seen.size()) +
                      " seen classes");
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(beta.coeffs.rows()));
    for (Index r = 0; r < beta.coeffs.rows(); ++r) ids.push_back("phantom_" + std::to_string(r));
    Matrix b = beta.coeffs * seen.vectors();
    return EmbeddingTable(std::move(ids), std::move(b), false);
}

Matrix softmax_distance_backprop(const Matrix& sim, const Matrix& grad_sim) {
    // s = softmax(-d): dL/dd_cr = -s_cr (g_cr - sum_r' s_cr' g_cr')
    const Vector inner = (sim.array() * grad_sim.array()).rowwise().sum();
    Matrix out = grad_sim;
    out.colwise() -= inner;
    return -(sim.array() * out.array()).matrix();
}

namespace {

double norm_penalty(const Matrix& b, double gamma, double h) {
    double acc = 0.0;
    for (Index r = 0; r < b.rows(); ++r) {
        const double gap = b.row(r).squaredNorm() - h * h;
        acc += gap * gap;
    }
    return 0.5 * gamma * acc;
}

} // namespace

Matrix phantom_smooth_gradient(const BaseClassifierSet& bases, const BetaMatrix& beta, const LabeledDataset& data,
                               const EmbeddingTable& seen, const Metric& metric, double lambda, double gamma,
                               double h, double* smooth_value) {
    const EmbeddingTable phantom = phantom_embeddings_from_beta(beta, seen);
    require_shape(bases.size() == phantom.size(), "one base classifier per phantom class required");
    const SimilarityMatrix sim = similarity_weights(seen, phantom, metric);
    const ObjectiveValue ov = training_objective(bases.vectors, data, sim.weights, OneVsOther{}, lambda);

    const Matrix grad_sim = ov.grad_synthesized * bases.vectors.transpose();
    const Matrix grad_dist = softmax_distance_backprop(sim.weights, grad_sim);

    const Matrix& a = seen.vectors();
    const Matrix& b = phantom.vectors();
    // d_cr = sum_i q_i (a_ci - b_ri)^2  =>  dd_cr/db_r = -2 q .* (a_c - b_r)
    const Vector col_mass = grad_dist.colwise().sum().transpose();
    Matrix grad_b = -2.0 * (grad_dist.transpose() * a - col_mass.asDiagonal() * b);
    grad_b.array().rowwise() *= metric.weights(a.cols()).transpose().array();
    for (Index r = 0; r < b.rows(); ++r)
        grad_b.row(r) += 2.0 * gamma * (b.row(r).squaredNorm() - h * h) * b.row(r);

    if (smooth_value) *smooth_value = ov.value + norm_penalty(b, gamma, h);
    return grad_b * a.transpose();
}

double phantom_objective(const BaseClassifierSet& bases, const BetaMatrix& beta, const LabeledDataset& data,
                         const EmbeddingTable& seen, const Metric& metric, double lambda, double eta, double gamma,
                         double h) {
    data.validate(true);
    const EmbeddingTable phantom = phantom_embeddings_from_beta(beta, seen);
    require_shape(bases.size() == phantom.size(), "one base classifier per phantom class required");
    const SimilarityMatrix sim = similarity_weights(seen, phantom, metric);
    const double smooth = training_objective(bases.vectors, data, sim.weights, OneVsOther{}, lambda).value;
    return smooth + eta * beta.coeffs.lpNorm<1>() + norm_penalty(phantom.vectors(), gamma, h);
}

PhantomResult learn_phantom_embeddings(const LabeledDataset& data, const EmbeddingTable& seen,
                                       const PhantomConfig& config, const TrainConfig& train_cfg, double lambda,
                                       const Metric& metric) {
    config.validate();
    data.validate();
    require_shape(seen.size() == data.num_classes, "seen embeddings must cover every training class");
    const Index num_phantom = config.num_phantom > 0 ? config.num_phantom : seen.size();

    PhantomResult out;
    out.beta = init_phantoms(config.init, seen, num_phantom, config.seed);
    TrainConfig tc = train_cfg;
    tc.lambda = lambda;

    DescentOptions beta_opts;
    beta_opts.max_iters = config.beta_iters;
    beta_opts.grad_tol = config.beta_tol;

    for (int round = 0; round < config.outer_rounds; ++round) {
        if (round > 0) {
            const ObjectiveFn smooth = [&](const Matrix& coeffs, Matrix& grad) {
                double value = 0.0;
                grad = phantom_smooth_gradient(out.bases, BetaMatrix{coeffs}, data, seen, metric, lambda,
                                               config.gamma, config.h, &value);
                return value;
            };
            proximal_gradient(smooth, config.eta, out.beta.coeffs, beta_opts);
        }
        const SimilarityMatrix sim = similarity_weights(seen, phantom_embeddings_from_beta(out.beta, seen), metric);
        TrainResult tr = train_base_classifiers(data, sim, OneVsOther{}, tc, round > 0 ? &out.bases.vectors : nullptr);
        out.bases = std::move(tr.bases);
        out.objective_trace.push_back(phantom_objective(out.bases, out.beta, data, seen, metric, lambda, config.eta,
                                                        config.gamma, config.h));
    }
    return out;
}

std::vector<int> kmeans_clusters(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
    const Index n = points.rows();
    if (k < 1 || k > n) fail(ErrorKind::InvalidArgument, "k-means: need 1 <= k <= number of points");
    Rng rng = make_rng(seed, "kmeans");

    // k-means++ seeding
    Matrix centers(k, points.cols());
    std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    centers.row(0) = points.row(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            best[i] = std::min(best[i], (points.row(i) - centers.row(c - 1)).squaredNorm());
            total += best[i];
        }
        Index pick = n - 1;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += best[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
            while (best[pick] == 0.0 && pick > 0) --pick;
        } else {
            pick = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = points.row(pick);
    }

    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int arg = 0;
            double dmin = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < dmin) {
                    dmin = d;
                    arg = c;
                }
            }
            if (assign[i] != arg) {
                assign[i] = arg;
                changed = true;
            }
        }
        // Refill empty clusters with the point farthest from its center.
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (int a : assign) ++count[a];
        for (int c = 0; c < k; ++c) {
            if (count[c] > 0) continue;
            Index far = 0;
            double dfar = -1.0;
            for (Index i = 0; i < n; ++i) {
                if (count[assign[i]] <= 1) continue;
                const double d = (points.row(i) - centers.row(assign[i])).squaredNorm();
                if (d > dfar) {
                    dfar = d;
                    far = i;
                }
            }
            --count[assign[far]];
            assign[far] = c;
            count[c] = 1;
            changed = true;
        }
        centers.setZero();
        for (Index i = 0; i < n; ++i) centers.row(assign[i]) += points.row(i);
        for (int c = 0; c < k; ++c) centers.row(c) /= count[c];
        if (!changed) break;
    }
    return assign;
}

BetaMatrix init_phantoms(InitStrategy strategy, const EmbeddingTable& seen, Index num_phantom, std::uint64_t seed) {
    const Index s = seen.size();
    if (num_phantom < 1) fail(ErrorKind::IncompatibleStrategy, "need at least one phantom class");
    BetaMatrix beta{Matrix::Zero(num_phantom, s)};
    const Matrix& a = seen.vectors();

    auto normalize_row = [&](Index r) {
        const double n = (beta.coeffs.row(r) * a).norm();
        if (n > 1e-12) beta.coeffs.row(r) /= n;
    };

    switch (strategy) {
    case InitStrategy::Identity:
        if (num_phantom != s)
            fail(ErrorKind::IncompatibleStrategy, "identity init requires R == S (" + std::to_string(num_phantom) +
                                                      " vs " + std::to_string(s) + ")");
        beta.coeffs.setIdentity();
        break;
    case InitStrategy::RandomSubset: {
        if (num_phantom > s) fail(ErrorKind::IncompatibleStrategy, "random subset init requires R <= S");
        std::vector<Index> idx(static_cast<std::size_t>(s));
        std::iota(idx.begin(), idx.end(), Index{0});
        Rng rng = make_rng(seed, "init");
        shuffle(idx.begin(), idx.end(), rng);
        for (Index r = 0; r < num_phantom; ++r) beta.coeffs(r, idx[r]) = 1.0;
        break;
    }
    case InitStrategy::KMeansCentroids: {
        if (num_phantom > s) fail(ErrorKind::IncompatibleStrategy, "k-means init requires R <= S");
        const std::vector<int> assign = kmeans_clusters(a, static_cast<int>(num_phantom), substream_seed(seed, "init"));
        std::vector<int> count(static_cast<std::size_t>(num_phantom), 0);
        for (int c : assign) ++count[c];
        for (Index c = 0; c < s; ++c) beta.coeffs(assign[c], c) = 1.0 / count[assign[c]];
        for (Index r = 0; r < num_phantom; ++r) normalize_row(r);
        break;
    }
    case InitStrategy::Mixed: {
        if (num_phantom <= s) fail(ErrorKind::IncompatibleStrategy, "mixed init requires R > S");
        beta.coeffs.topRows(s).setIdentity();
        Rng rng = make_rng(seed, "init");
        for (Index r = s; r < num_phantom; ++r) {
            // Uniform draw on the simplex via normalized exponentials.
            for (Index c = 0; c < s; ++c) {
                double u = uniform01(rng);
                while (u <= 0.0) u = uniform01(rng);
                beta.coeffs(r, c) = -std::log(u);
            }
            beta.coeffs.row(r) /= beta.coeffs.row(r).sum();
            normalize_row(r);
        }
        break;
    }
    }
    return beta;
}

namespace {

struct MetricEval {
    double value;
    Vector grad;
};

MetricEval evaluate_metric(const Vector& m, const BaseClassifierSet& bases, const LabeledDataset& data,
                           const EmbeddingTable& seen, const EmbeddingTable& phantom, double lambda, double gamma_m,
                           double sigma0) {
    require_dims(m.size(), seen.dim(), "diagonal metric");
    const SimilarityMatrix sim = similarity_weights(seen, phantom, Metric::diagonal(m));
    const ObjectiveValue ov = training_objective(bases.vectors, data, sim.weights, OneVsOther{}, lambda, RegTarget::Bases);
    const Matrix grad_dist =
        softmax_distance_backprop(sim.weights, ov.grad_synthesized * bases.vectors.transpose());
    const Matrix& a = seen.vectors();
    const Matrix& b = phantom.vectors();
    Vector grad_q = Vector::Zero(m.size());
    for (Index c = 0; c < a.rows(); ++c)
        for (Index r = 0; r < b.rows(); ++r)
            grad_q += grad_dist(c, r) * (a.row(c) - b.row(r)).transpose().array().square().matrix();

    MetricEval out;
    const Vector gap = m.array() - sigma0;
    out.value = ov.value + 0.5 * gamma_m * gap.squaredNorm();
    out.grad = 2.0 * m.cwiseProduct(grad_q) + gamma_m * gap;
    return out;
}

} // namespace

double metric_objective(const Vector& m, const BaseClassifierSet& bases, const LabeledDataset& data,
                        const EmbeddingTable& seen, const EmbeddingTable& phantom, double lambda, double gamma_m,
                        double sigma0) {
    data.validate(true);
    return evaluate_metric(m, bases, data, seen, phantom, lambda, gamma_m, sigma0).value;
}

Vector metric_gradient(const Vector& m, const BaseClassifierSet& bases, const LabeledDataset& data,
                       const EmbeddingTable& seen, const EmbeddingTable& phantom, double lambda, double gamma_m,
                       double sigma0, double* value) {
    data.validate(true);
    MetricEval e = evaluate_metric(m, bases, data, seen, phantom, lambda, gamma_m, sigma0);
    if (value) *value = e.value;
    return e.grad;
}

MetricResult learn_metric(const LabeledDataset& data, const EmbeddingTable& seen, const EmbeddingTable& phantom,
                          const MetricLearnConfig& cfg, const TrainConfig& train_cfg, double lambda) {
    cfg.validate();
    data.validate();
    require_shape(phantom.size() == seen.size(), "metric learning assumes R == S");
    require_shape(seen.size() == data.num_classes, "seen embeddings must cover every training class");

    const FoldPlan plan = make_folds(data.labels, cfg.folds, FoldMode::SampleWise, substream_seed(cfg.seed, "folds"));
    std::vector<Index> v_rows, m_rows;
    for (int f = 0; f < cfg.folds; ++f) {
        const auto& val = plan.folds[static_cast<std::size_t>(f)].validation;
        if (f < cfg.folds - 1) v_rows.insert(v_rows.end(), val.begin(), val.end());
        if (f > 0) m_rows.insert(m_rows.end(), val.begin(), val.end());
    }
    std::sort(v_rows.begin(), v_rows.end());
    std::sort(m_rows.begin(), m_rows.end());
    const LabeledDataset v_data = data.subset(v_rows);
    const LabeledDataset m_data = data.subset(m_rows);

    TrainConfig tc = train_cfg;
    tc.lambda = lambda;
    Vector m = Vector::Constant(seen.dim(), cfg.sigma0);

    MetricResult out;
    auto fit_bases = [&](const Matrix* init) {
        const SimilarityMatrix sim = similarity_weights(seen, phantom, Metric::diagonal(m));
        out.bases = train_base_classifiers(v_data, sim, OneVsOther{}, tc, init, RegTarget::Bases).bases;
    };
    fit_bases(nullptr);

    DescentOptions m_opts;
    m_opts.max_iters = cfg.m_iters;
    m_opts.grad_tol = train_cfg.grad_tol;
    m_opts.memory = 0; // plain gradient steps on m
    for (int round = 0; round < cfg.outer_rounds; ++round) {
        const ObjectiveFn f = [&](const Matrix& x, Matrix& grad) {
            const MetricEval e = evaluate_metric(x.col(0), out.bases, m_data, seen, phantom, lambda, cfg.gamma_m, cfg.sigma0);
            grad = e.grad;
            return e.value;
        };
        Matrix mx = m;
        const DescentReport rep = gradient_descent(f, mx, m_opts);
        m = mx.col(0);
        out.m_steps.emplace_back(rep.initial_objective, rep.final_objective);
        fit_bases(&out.bases.vectors);
    }
    out.metric = Metric::diagonal(m);
    return out;
}

} // namespace phantom
