#pragma once

#include "phantom/adaptation.hpp"
#include "phantom/training.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace phantom {

enum class FoldMode { ClassWise, SampleWise };

std::string_view to_string(FoldMode m);

struct Fold {
    std::vector<Index> train;
    std::vector<Index> validation;
};

// Validation sets partition the samples. Under ClassWise, no class appears on
// both sides of any fold.
struct FoldPlan {
    FoldMode mode = FoldMode::ClassWise;
    std::vector<Fold> folds;
    std::uint64_t seed = 0;
};

FoldPlan make_folds(std::span<const int> labels, int k, FoldMode mode, std::uint64_t seed);

struct HyperGrid {
    std::vector<double> lambda_values;
    std::vector<double> sigma_values;
    std::vector<double> eta_values;
    std::vector<double> gamma_values;
    std::vector<int> conse_T_values;

    // lambda 2^-10..2^4 and sigma 2^-5..2^5 (8 log-spaced values each),
    // eta/gamma 1e-3..1e1 (5 values), T in {1, 2, 5, 10}.
    static HyperGrid defaults();
};

enum class CvStage {
    LambdaSigma, // phantoms fixed to the seen embeddings
    EtaGamma,    // lambda and sigma frozen, phantom embeddings learned
    ConseT,      // number of combined seen classes for the baseline
};

struct CvCell {
    double lambda = 0.0;
    double sigma = 1.0;
    double eta = 0.0;
    double gamma = 0.0;
    int T = 1;
};

struct CvCellResult {
    CvCell cell;
    std::vector<double> fold_scores;
    double mean = -std::numeric_limits<double>::infinity();
    bool failed = false;
    std::string error;
};

struct CvResult {
    CvStage stage = CvStage::LambdaSigma;
    std::size_t best_index = 0;
    CvCell best;
    std::vector<CvCellResult> cells;
};

struct CvSettings {
    CvStage stage = CvStage::LambdaSigma;
    LossKind loss = OneVsOther{};
    TrainConfig train;
    CvCell frozen;        // lambda/sigma used by the EtaGamma stage
    PhantomConfig phantom; // rounds/iterations for the EtaGamma stage
    double conse_l2 = 1.0;
};

// The cells a stage sweeps, in grid order (lambda-major for stage 1, eta-major for stage 2).
std::vector<CvCell> grid_cells(const HyperGrid& grid, CvStage stage, const CvCell& frozen);

// Trains on each fold's training part and scores per-class accuracy on its
// validation part. Under ClassWise, validation classes are synthesized from
// their embeddings and compete only among themselves. Failed cells score -inf.
// Best cell = highest mean; ties go to the earliest cell.
CvResult cross_validate(const LabeledDataset& data, const EmbeddingTable& seen, const HyperGrid& grid,
                        const FoldPlan& plan, const CvSettings& settings);

// Score of one cell on one fold (exposed for direct evaluation in tests).
double score_fold(const LabeledDataset& data, const EmbeddingTable& seen, const Fold& fold, FoldMode mode,
                  const CvCell& cell, const CvSettings& settings);

// Tab-delimited table: lambda sigma eta gamma T fold_0..fold_{k-1} mean status.
void write_cv_report(std::ostream& os, const CvResult& result);

} // namespace phantom
