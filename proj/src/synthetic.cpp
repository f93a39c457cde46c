#include "phantom/synthetic.hpp"

#include "phantom/random.hpp"

#include <cmath>
#include <cstdio>

namespace phantom {

void SyntheticSpec::validate() const {
    if (seen < 1 || unseen < 1 || feature_dim < 1 || embed_dim < 1 || samples_per_class < 1)
        fail(ErrorKind::InvalidSpec, "synthetic spec: all counts must be >= 1");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail(ErrorKind::InvalidSpec, "noise_std must be >= 0");
    if (!(margin > 0.0)) fail(ErrorKind::InvalidSpec, "margin must be > 0");
}

namespace {

std::string class_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%03d", i);
    return buf;
}

LabeledDataset sample_classes(const Matrix& directions, int first, int count, int per_class, double margin,
                              double noise, Rng& rng) {
    LabeledDataset ds;
    ds.num_classes = count;
    ds.features.resize(static_cast<Index>(count) * per_class, directions.cols());
    Index row = 0;
    for (int c = 0; c < count; ++c) {
        for (int i = 0; i < per_class; ++i, ++row) {
            for (Index j = 0; j < directions.cols(); ++j)
                ds.features(row, j) = margin * directions(first + c, j) + noise * standard_normal(rng);
            ds.labels.push_back(c);
        }
    }
    return ds;
}

} // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int total = spec.seen + spec.unseen;
    Rng rng = make_rng(spec.seed, "data");

    Matrix a(total, spec.embed_dim);
    for (int c = 0; c < total; ++c) {
        double n = 0.0;
        while (n < 1e-12) {
            for (int i = 0; i < spec.embed_dim; ++i) a(c, i) = standard_normal(rng);
            n = a.row(c).norm();
        }
        a.row(c) /= n;
    }
    Matrix t(spec.embed_dim, spec.feature_dim);
    for (Index i = 0; i < t.rows(); ++i)
        for (Index j = 0; j < t.cols(); ++j) t(i, j) = standard_normal(rng);

    SyntheticData out;
    out.ground_truth = a * t;
    Matrix directions = out.ground_truth;
    for (Index c = 0; c < directions.rows(); ++c) {
        const double n = directions.row(c).norm();
        if (n > 0.0) directions.row(c) /= n;
    }

    out.seen_train = sample_classes(directions, 0, spec.seen, spec.samples_per_class, spec.margin, spec.noise_std, rng);
    out.unseen_test =
        sample_classes(directions, spec.seen, spec.unseen, spec.samples_per_class, spec.margin, spec.noise_std, rng);

    std::vector<std::string> seen_ids, unseen_ids;
    for (int c = 0; c < spec.seen; ++c) seen_ids.push_back(class_name(c));
    for (int c = 0; c < spec.unseen; ++c) unseen_ids.push_back(class_name(spec.seen + c));
    out.seen_embeddings = EmbeddingTable(std::move(seen_ids), a.topRows(spec.seen), true);
    out.unseen_embeddings = EmbeddingTable(std::move(unseen_ids), a.bottomRows(spec.unseen), true);
    return out;
}

} // namespace phantom
