#include "phantom/evaluation.hpp"

#include "phantom/synthesis.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace phantom {

double per_class_accuracy(std::span<const Index> predictions, std::span<const Index> truths, Index num_classes) {
    require_shape(predictions.size() == truths.size(), "predictions and truths differ in length");
    std::vector<Index> total(static_cast<std::size_t>(num_classes), 0), hit(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const Index t = truths[i];
        if (t < 0 || t >= num_classes) fail(ErrorKind::InvalidLabel, "truth label outside the class set");
        ++total[t];
        if (predictions[i] == t) ++hit[t];
    }
    double acc = 0.0;
    Index present = 0;
    for (Index c = 0; c < num_classes; ++c) {
        if (total[c] == 0) continue;
        acc += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
        ++present;
    }
    if (present == 0) fail(ErrorKind::EmptyEvaluation, "no class has samples");
    return acc / static_cast<double>(present);
}

double flat_hit_at_k(const std::vector<std::vector<Index>>& rankings, std::span<const Index> truths, Index k) {
    require_shape(rankings.size() == truths.size(), "rankings and truths differ in length");
    if (truths.empty()) fail(ErrorKind::EmptyEvaluation, "no samples");
    if (k < 1) fail(ErrorKind::InvalidArgument, "K must be >= 1");
    Index hits = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const auto& r = rankings[i];
        if (static_cast<Index>(r.size()) < k) fail(ErrorKind::KTooLarge, "ranking shorter than K");
        if (std::find(r.begin(), r.begin() + k, truths[i]) != r.begin() + k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truths.size());
}

Hierarchy::Hierarchy(const std::vector<std::pair<std::string, std::string>>& edges,
                     const std::vector<std::string>& valid) {
    for (const auto& [parent, child] : edges) {
        const Index p = add_node(parent);
        const Index c = add_node(child);
        if (p == c) continue;
        adj_[p].push_back(c);
        adj_[c].push_back(p);
    }
    for (auto& a : adj_) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    for (const auto& v : valid) valid_[static_cast<std::size_t>(add_node(v))] = true;
}

Index Hierarchy::add_node(const std::string& id) {
    if (auto it = index_.find(id); it != index_.end()) return it->second;
    const Index idx = size();
    ids_.push_back(id);
    index_.emplace(id, idx);
    adj_.emplace_back();
    valid_.push_back(false);
    return idx;
}

Index Hierarchy::index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

Hierarchy load_hierarchy(const std::string& edges_path, const std::string& valid_path) {
    std::ifstream ef(edges_path);
    if (!ef) fail(ErrorKind::Io, "cannot open hierarchy file " + edges_path);
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ef, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            fail(ErrorKind::Parse, edges_path + ":" + std::to_string(lineno) + ": expected parent<TAB>child");
        edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    std::ifstream vf(valid_path);
    if (!vf) fail(ErrorKind::Io, "cannot open valid-labels file " + valid_path);
    std::vector<std::string> valid;
    while (std::getline(vf, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) valid.push_back(line);
    }
    return Hierarchy(edges, valid);
}

std::vector<Index> h_correct_set(const Hierarchy& h, Index node, Index k) {
    if (node < 0 || node >= h.size()) fail(ErrorKind::InvalidArgument, "class not in hierarchy");
    if (k < 1) fail(ErrorKind::InvalidArgument, "K must be >= 1");
    std::vector<int> hops(static_cast<std::size_t>(h.size()), -1);
    std::vector<Index> frontier{node}, result;
    hops[node] = 0;
    while (static_cast<Index>(result.size()) < k) {
        if (frontier.empty())
            fail(ErrorKind::Unreachable, "only " + std::to_string(result.size()) + " valid classes reachable from '" +
                                             h.id(node) + "', K=" + std::to_string(k));
        for (Index v : frontier)
            if (h.is_valid(v)) result.push_back(v);
        std::vector<Index> next;
        for (Index v : frontier)
            for (Index u : h.neighbors(v))
                if (hops[u] < 0) {
                    hops[u] = hops[v] + 1;
                    next.push_back(u);
                }
        frontier = std::move(next);
    }
    std::sort(result.begin(), result.end());
    return result;
}

void HCorrectSetCache::build(std::span<const Index> nodes, Index k) {
    for (Index n : nodes) {
        const auto key = std::make_pair(n, k);
        if (!cache_.contains(key)) cache_.emplace(key, h_correct_set(*h_, n, k));
    }
}

const std::vector<Index>& HCorrectSetCache::get(Index node, Index k) const {
    auto it = cache_.find({node, k});
    if (it == cache_.end()) fail(ErrorKind::InvalidArgument, "h_correct_set cache miss; call build() first");
    return it->second;
}

double hierarchical_precision_at_k(const std::vector<std::vector<Index>>& rankings, std::span<const Index> truths,
                                   const Hierarchy& h, Index k) {
    require_shape(rankings.size() == truths.size(), "rankings and truths differ in length");
    if (truths.empty()) fail(ErrorKind::EmptyEvaluation, "no samples");
    HCorrectSetCache cache(h);
    cache.build(truths, k);
    double total = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const auto& r = rankings[i];
        if (static_cast<Index>(r.size()) < k) fail(ErrorKind::KTooLarge, "ranking shorter than K");
        const auto& correct = cache.get(truths[i], k);
        Index overlap = 0;
        for (Index j = 0; j < k; ++j)
            if (std::binary_search(correct.begin(), correct.end(), r[j])) ++overlap;
        total += static_cast<double>(overlap) / static_cast<double>(k);
    }
    return total / static_cast<double>(truths.size());
}

EvalReport evaluate_scores(const Matrix& scores, std::span<const Index> truths, const std::vector<std::string>& class_ids,
                           std::span<const Index> ks, const Hierarchy* h, std::span<const Index> class_nodes) {
    require_shape(static_cast<Index>(truths.size()) == scores.rows(), "one truth per score row required");
    require_shape(static_cast<Index>(class_ids.size()) == scores.cols(), "one class id per score column required");
    const Index classes = scores.cols();
    Index kmax = 1;
    for (Index k : ks) kmax = std::max(kmax, std::min(k, classes));

    std::vector<std::vector<Index>> rankings(truths.size());
    std::vector<Index> top1(truths.size());
    for (std::size_t n = 0; n < truths.size(); ++n) {
        rankings[n] = top_k_row(scores, static_cast<Index>(n), kmax);
        top1[n] = rankings[n][0];
    }

    EvalReport rep;
    rep.per_class_accuracy = per_class_accuracy(top1, truths, classes);
    for (Index k : ks)
        if (k <= classes) rep.flat_hits[k] = flat_hit_at_k(rankings, truths, k);

    if (h) {
        require_shape(static_cast<Index>(class_nodes.size()) == classes, "one hierarchy node per class required");
        std::vector<std::vector<Index>> node_rankings(rankings.size());
        std::vector<Index> node_truths(truths.size());
        for (std::size_t n = 0; n < truths.size(); ++n) {
            node_truths[n] = class_nodes[static_cast<std::size_t>(truths[n])];
            for (Index c : rankings[n]) node_rankings[n].push_back(class_nodes[static_cast<std::size_t>(c)]);
        }
        for (Index k : ks)
            if (k <= classes) rep.hierarchical_precision[k] = hierarchical_precision_at_k(node_rankings, node_truths, *h, k);
    }

    rep.counts.resize(static_cast<std::size_t>(classes));
    for (Index c = 0; c < classes; ++c) rep.counts[c].class_id = class_ids[c];
    for (std::size_t n = 0; n < truths.size(); ++n) {
        ++rep.counts[truths[n]].samples;
        if (top1[n] == truths[n]) ++rep.counts[truths[n]].correct;
    }
    return rep;
}

void write_eval_report(std::ostream& os, const EvalReport& report) {
    const auto old = os.precision(17);
    os << "metric\tK\tvalue\n";
    os << "per_class_accuracy\t1\t" << report.per_class_accuracy << '\n';
    for (const auto& [k, v] : report.flat_hits) os << "flat_hit\t" << k << '\t' << v << '\n';
    for (const auto& [k, v] : report.hierarchical_precision) os << "hierarchical_precision\t" << k << '\t' << v << '\n';
    for (const auto& t : report.counts)
        os << "class_accuracy:" << t.class_id << "\t1\t"
           << (t.samples ? static_cast<double>(t.correct) / static_cast<double>(t.samples) : 0.0) << '\n';
    os.precision(old);
}

} // namespace phantom
