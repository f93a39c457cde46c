#include "phantom/training.hpp"

#include "phantom/kernels.hpp"

#include <cmath>
#include <limits>

namespace phantom {

void LabeledDataset::validate(bool allow_empty) const {
    if (!allow_empty && features.rows() < 1) fail(ErrorKind::InvalidArgument, "dataset is empty");
    require_shape(static_cast<Index>(labels.size()) == features.rows(),
                  "dataset: " + std::to_string(labels.size()) + " labels for " + std::to_string(features.rows()) +
                      " feature rows");
    if (num_classes < 1) fail(ErrorKind::InvalidArgument, "dataset: num_classes must be >= 1");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            fail(ErrorKind::InvalidLabel, "label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    if (!features.allFinite()) fail(ErrorKind::NonFinite, "dataset features contain NaN/Inf");
}

LabeledDataset LabeledDataset::subset(std::span<const Index> rows) const {
    LabeledDataset out;
    out.num_classes = num_classes;
    out.features.resize(static_cast<Index>(rows.size()), features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
        out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
    }
    return out;
}

std::string_view loss_name(const LossKind& loss) {
    if (std::holds_alternative<OneVsOther>(loss)) return "ovo";
    if (std::holds_alternative<CrammerSinger>(loss)) return "cs";
    return "cs_struct";
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorKind::InvalidArgument, "lambda must be >= 0");
    if (!(grad_tol > 0.0)) fail(ErrorKind::InvalidArgument, "grad_tol must be > 0");
    if (max_iters < 1) fail(ErrorKind::InvalidArgument, "max_iters must be >= 1");
}

Matrix margin_matrix(const LossKind& loss, int num_classes) {
    Matrix delta = Matrix::Ones(num_classes, num_classes);
    delta.diagonal().setZero();
    if (const auto* st = std::get_if<CrammerSingerStruct>(&loss)) {
        const Matrix& a = st->seen_embeddings.vectors();
        require_shape(a.rows() == num_classes, "structured loss: embeddings must cover all seen classes");
        for (int c = 0; c < num_classes; ++c)
            for (int y = 0; y < num_classes; ++y) delta(c, y) = (a.row(c) - a.row(y)).norm();
    }
    return delta;
}

ObjectiveValue training_objective(const Matrix& bases, const LabeledDataset& data, const Matrix& sim,
                                  const LossKind& loss, double lambda, RegTarget reg) {
    require_shape(sim.cols() == bases.rows(), "similarity columns must equal number of base classifiers");
    require_shape(sim.rows() == data.num_classes, "similarity rows must equal number of seen classes");
    require_dims(data.dim(), bases.cols(), "feature dimension");

    ObjectiveValue out;
    out.synthesized.noalias() = sim * bases;
    const Matrix scores = kernels::omp::scores(data.features, out.synthesized);
    kernels::LossGrad lg;
    if (std::holds_alternative<OneVsOther>(loss)) {
        lg = kernels::omp::ovo_loss_grad(data.features, data.labels, scores);
    } else {
        if (data.num_classes < 2) fail(ErrorKind::InvalidArgument, "Crammer-Singer needs at least 2 classes");
        lg = kernels::omp::cs_loss_grad(data.features, data.labels, scores, margin_matrix(loss, data.num_classes));
    }
    out.value = lg.loss;
    out.grad_synthesized = std::move(lg.grad);
    if (reg == RegTarget::Synthesized) {
        out.value += 0.5 * lambda * out.synthesized.squaredNorm();
        out.grad_synthesized += lambda * out.synthesized;
        out.grad_bases.noalias() = sim.transpose() * out.grad_synthesized;
    } else {
        out.value += 0.5 * lambda * bases.squaredNorm();
        out.grad_bases.noalias() = sim.transpose() * out.grad_synthesized;
        out.grad_bases += lambda * bases;
    }
    return out;
}

double ovo_objective(const BaseClassifierSet& bases, const LabeledDataset& data, const SimilarityMatrix& weights,
                     double lambda) {
    data.validate(true);
    return training_objective(bases.vectors, data, weights.weights, OneVsOther{}, lambda).value;
}

Matrix ovo_gradient(const BaseClassifierSet& bases, const LabeledDataset& data, const SimilarityMatrix& weights,
                    double lambda) {
    data.validate(true);
    return training_objective(bases.vectors, data, weights.weights, OneVsOther{}, lambda).grad_bases;
}

double cs_loss(const Vector& scores, int y, const std::function<double(int, int)>& delta) {
    if (scores.size() < 2) fail(ErrorKind::InvalidArgument, "Crammer-Singer loss needs at least 2 scores");
    if (y < 0 || y >= scores.size()) fail(ErrorKind::InvalidLabel, "label " + std::to_string(y) + " out of range");
    double worst = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < scores.size(); ++c) {
        if (c == y) continue;
        worst = std::max(worst, delta(c, y) + scores(c) - scores(y));
    }
    return std::max(0.0, worst);
}

DescentOptions descent_options(const TrainConfig& config) {
    DescentOptions o;
    o.max_iters = config.max_iters;
    o.grad_tol = config.grad_tol;
    return o;
}

TrainResult train_base_classifiers(const LabeledDataset& data, const SimilarityMatrix& weights, const LossKind& loss,
                                   const TrainConfig& config, const Matrix* init, RegTarget reg) {
    config.validate();
    data.validate();
    require_shape(weights.num_rows() == data.num_classes,
                  "similarity has " + std::to_string(weights.num_rows()) + " rows for " +
                      std::to_string(data.num_classes) + " seen classes");
    const Matrix& sim = weights.weights;
    Matrix v = init ? *init : Matrix::Zero(weights.num_phantom(), data.dim());
    require_shape(v.rows() == weights.num_phantom() && v.cols() == data.dim(), "initial bases have the wrong shape");

    const ObjectiveFn f = [&](const Matrix& x, Matrix& grad) {
        ObjectiveValue ov = training_objective(x, data, sim, loss, config.lambda, reg);
        grad = std::move(ov.grad_bases);
        return ov.value;
    };
    TrainResult out;
    DescentOptions opts = descent_options(config);
    opts.keep_trace = true;
    out.report = gradient_descent(f, v, opts);
    out.bases.vectors = std::move(v);
    return out;
}

} // namespace phantom
