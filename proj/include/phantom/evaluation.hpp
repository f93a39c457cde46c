#pragma once

#include "phantom/core.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace phantom {

// Mean over classes of within-class accuracy; classes without samples are skipped.
double per_class_accuracy(std::span<const Index> predictions, std::span<const Index> truths, Index num_classes);

// Fraction of samples whose truth appears among the first K entries of its ranking.
double flat_hit_at_k(const std::vector<std::vector<Index>>& rankings, std::span<const Index> truths, Index k);

// Class hierarchy as an undirected graph over string ids. Edges come from
// `parent<TAB>child` lines; only `valid` nodes may appear in a correct set.
class Hierarchy {
public:
    Hierarchy() = default;
    Hierarchy(const std::vector<std::pair<std::string, std::string>>& edges, const std::vector<std::string>& valid);

    Index size() const noexcept { return static_cast<Index>(ids_.size()); }
    Index index_of(const std::string& id) const;
    const std::string& id(Index node) const { return ids_[static_cast<std::size_t>(node)]; }
    const std::vector<Index>& neighbors(Index node) const { return adj_[static_cast<std::size_t>(node)]; }
    bool is_valid(Index node) const { return valid_[static_cast<std::size_t>(node)]; }
    // Adds a node with no edges (no-op if present); returns its index.
    Index add_node(const std::string& id);

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, Index> index_;
    std::vector<std::vector<Index>> adj_;
    std::vector<bool> valid_;
};

Hierarchy load_hierarchy(const std::string& edges_path, const std::string& valid_path);

// Union of valid nodes at hop radius 0, 1, 2, ... around `node`, stopping
// once it holds at least K classes. Sorted ascending.
std::vector<Index> h_correct_set(const Hierarchy& h, Index node, Index k);

// Memoized h_correct_set. Populate with `build`; `get` on a built key is a
// const lookup and safe from concurrent readers.
class HCorrectSetCache {
public:
    explicit HCorrectSetCache(const Hierarchy& h) : h_(&h) {}
    void build(std::span<const Index> nodes, Index k);
    const std::vector<Index>& get(Index node, Index k) const;

private:
    const Hierarchy* h_;
    std::map<std::pair<Index, Index>, std::vector<Index>> cache_;
};

// Mean over samples of |top-K ∩ h_correct_set(truth, K)| / K. Rankings and
// truths are hierarchy node indices.
double hierarchical_precision_at_k(const std::vector<std::vector<Index>>& rankings, std::span<const Index> truths,
                                   const Hierarchy& h, Index k);

struct ClassTally {
    std::string class_id;
    Index samples = 0;
    Index correct = 0;
};

struct EvalReport {
    double per_class_accuracy = 0.0;
    std::map<Index, double> flat_hits;
    std::map<Index, double> hierarchical_precision;
    std::vector<ClassTally> counts;
};

// Builds a report from an N x C score matrix; `ks` selects the flat-hit (and,
// when a hierarchy is given, hierarchical precision) cut-offs. `class_nodes`
// maps each score column to a hierarchy node.
EvalReport evaluate_scores(const Matrix& scores, std::span<const Index> truths, const std::vector<std::string>& class_ids,
                           std::span<const Index> ks, const Hierarchy* h = nullptr,
                           std::span<const Index> class_nodes = {});

// Tab-delimited `metric<TAB>K<TAB>value` lines, with a header.
void write_eval_report(std::ostream& os, const EvalReport& report);

} // namespace phantom
