#pragma once

#include "phantom/training.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace phantom {

// Toy zero-shot problem in which classifiers are a linear function of the
// class embeddings: a_c uniform on the unit sphere of R^d, T (d x D) with
// standard normal entries, w*_c = a_c^T T, and samples
// x = margin * w*_c / ||w*_c|| + N(0, noise_std^2 I).
struct SyntheticSpec {
    int seen = 20;
    int unseen = 5;
    int feature_dim = 16;
    int embed_dim = 8;
    int samples_per_class = 50;
    double noise_std = 0.05;
    double margin = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    LabeledDataset seen_train;   // labels index seen classes
    LabeledDataset unseen_test;  // labels index unseen classes
    EmbeddingTable seen_embeddings;
    EmbeddingTable unseen_embeddings;
    Matrix ground_truth; // (S + U) x D, seen rows first
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

} // namespace phantom
