#include "doctest.h"
#include "support.hpp"

#include "phantom/kernels.hpp"
#include "phantom/model_selection.hpp"
#include "phantom/synthetic.hpp"

#include <algorithm>
#include <set>
#include <sstream>

using namespace phantom;

namespace {

std::vector<int> blocks(int classes, int per) {
    std::vector<int> y;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per; ++i) y.push_back(c);
    return y;
}

std::set<int> labels_of(const std::vector<Index>& rows, const std::vector<int>& y) {
    std::set<int> out;
    for (Index n : rows) out.insert(y[static_cast<std::size_t>(n)]);
    return out;
}

SyntheticData small_problem(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seen = 10;
    spec.unseen = 2;
    spec.feature_dim = 8;
    spec.embed_dim = 5;
    spec.samples_per_class = 12;
    spec.seed = seed;
    return generate_synthetic(spec);
}

CvSettings quick_settings() {
    CvSettings s;
    s.train.max_iters = 40;
    return s;
}

} // namespace

TEST_CASE("class-wise folds split whole classes") {
    const auto y = blocks(6, 4);
    const FoldPlan plan = make_folds(y, 3, FoldMode::ClassWise, 7);
    REQUIRE(plan.folds.size() == 3);
    std::set<int> seen_classes;
    for (const auto& f : plan.folds) {
        const auto val = labels_of(f.validation, y);
        CHECK(val.size() == 2);
        CHECK(f.validation.size() == 8);
        for (int c : val) CHECK(seen_classes.insert(c).second);
    }
    CHECK(seen_classes.size() == 6);
}

TEST_CASE("sample-wise folds stratify") {
    const auto y = blocks(2, 10);
    const FoldPlan plan = make_folds(y, 2, FoldMode::SampleWise, 1);
    for (const auto& f : plan.folds) {
        int zeros = 0, ones = 0;
        for (Index n : f.validation) (y[static_cast<std::size_t>(n)] == 0 ? zeros : ones)++;
        CHECK(zeros == 5);
        CHECK(ones == 5);
    }
}

TEST_CASE("random fold plans partition the samples") {
    Rng rng = make_rng(61, "plans");
    for (int t = 0; t < 100; ++t) {
        const int classes = testing::uniform_int(rng, 2, 15);
        const int k = testing::uniform_int(rng, 2, classes);
        std::vector<int> y;
        const int n = testing::uniform_int(rng, classes, 120);
        for (int i = 0; i < n; ++i) y.push_back(i < classes ? i : testing::uniform_int(rng, 0, classes - 1));
        for (FoldMode mode : {FoldMode::ClassWise, FoldMode::SampleWise}) {
            CAPTURE(to_string(mode));
            const FoldPlan plan = make_folds(y, k, mode, static_cast<std::uint64_t>(t));
            std::vector<int> hits(static_cast<std::size_t>(n), 0);
            for (const auto& f : plan.folds) {
                CHECK(f.train.size() + f.validation.size() == static_cast<std::size_t>(n));
                for (Index i : f.validation) ++hits[static_cast<std::size_t>(i)];
                std::vector<Index> both;
                std::set_intersection(f.train.begin(), f.train.end(), f.validation.begin(), f.validation.end(),
                                      std::back_inserter(both));
                CHECK(both.empty());
                if (mode == FoldMode::ClassWise) {
                    const auto tr = labels_of(f.train, y), va = labels_of(f.validation, y);
                    std::vector<int> shared;
                    std::set_intersection(tr.begin(), tr.end(), va.begin(), va.end(), std::back_inserter(shared));
                    CHECK(shared.empty());
                    CHECK_FALSE(va.empty());
                }
            }
            CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
        }
    }
}

TEST_CASE("fold plan errors and determinism") {
    const auto y = blocks(3, 5);
    try {
        make_folds(y, 4, FoldMode::ClassWise, 0);
        FAIL("expected TooFewClasses");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TooFewClasses);
    }
    CHECK_THROWS_AS(make_folds(y, 1, FoldMode::SampleWise, 0), Error);
    CHECK_THROWS_AS(make_folds(std::vector<int>{}, 2, FoldMode::SampleWise, 0), Error);

    const auto z = blocks(9, 3);
    const auto a = make_folds(z, 3, FoldMode::ClassWise, 5), b = make_folds(z, 3, FoldMode::ClassWise, 5);
    bool differs = false;
    for (std::size_t f = 0; f < 3; ++f) {
        CHECK(a.folds[f].validation == b.folds[f].validation);
        for (std::uint64_t s = 6; s < 12 && !differs; ++s)
            differs = make_folds(z, 3, FoldMode::ClassWise, s).folds[f].validation != a.folds[f].validation;
    }
    CHECK(differs);
}

TEST_CASE("grid order and defaults") {
    HyperGrid g;
    g.lambda_values = {1, 2};
    g.sigma_values = {10, 20, 30};
    g.eta_values = {0.1};
    g.gamma_values = {5, 6};
    const auto cells = grid_cells(g, CvStage::LambdaSigma, {});
    REQUIRE(cells.size() == 6);
    CHECK(cells[0].lambda == 1);
    CHECK(cells[2].sigma == 30);
    CHECK(cells[3].lambda == 2);
    CHECK(cells[3].sigma == 10);

    CvCell frozen;
    frozen.lambda = 0.5;
    frozen.sigma = 2;
    const auto second = grid_cells(g, CvStage::EtaGamma, frozen);
    REQUIRE(second.size() == 2);
    CHECK(second[1].gamma == 6);
    CHECK(second[1].lambda == 0.5);
    CHECK(second[1].sigma == 2);

    g.sigma_values.clear();
    CHECK_THROWS_AS(grid_cells(g, CvStage::LambdaSigma, {}), Error);

    const HyperGrid d = HyperGrid::defaults();
    CHECK(d.lambda_values.size() == 8);
    CHECK(d.lambda_values.front() == doctest::Approx(std::pow(2.0, -10)));
    CHECK(d.lambda_values.back() == doctest::Approx(16.0));
    CHECK(d.sigma_values.front() == doctest::Approx(1.0 / 32));
    CHECK(d.sigma_values.back() == doctest::Approx(32.0));
    CHECK(d.conse_T_values == std::vector<int>{1, 2, 5, 10});
}

TEST_CASE("cross-validation picks the best mean of directly scored folds") {
    const auto p = small_problem(3);
    HyperGrid g;
    g.lambda_values = {0.1, 1.0};
    g.sigma_values = {0.3, 1.0, 3.0};
    const FoldPlan plan = make_folds(p.seen_train.labels, 3, FoldMode::ClassWise, 11);
    const CvSettings s = quick_settings();
    const CvResult r = cross_validate(p.seen_train, p.seen_embeddings, g, plan, s);
    REQUIRE(r.cells.size() == 6);
    std::size_t best = 0;
    double best_mean = -1;
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
        double sum = 0;
        for (std::size_t f = 0; f < 3; ++f) {
            const double direct = score_fold(p.seen_train, p.seen_embeddings, plan.folds[f], plan.mode, r.cells[i].cell, s);
            CHECK(direct == r.cells[i].fold_scores[f]);
            sum += direct;
        }
        CHECK(r.cells[i].mean == doctest::Approx(sum / 3));
        if (sum / 3 > best_mean) {
            best_mean = sum / 3;
            best = i;
        }
    }
    CHECK(r.best_index == best);
    CHECK(r.best.lambda == r.cells[best].cell.lambda);
    CHECK(r.best.sigma == r.cells[best].cell.sigma);
}

TEST_CASE("failed cells score -inf and ties go to the first cell") {
    const auto p = small_problem(4);
    HyperGrid g;
    g.lambda_values = {-1.0, 0.5, 0.5};
    g.sigma_values = {1.0};
    const FoldPlan plan = make_folds(p.seen_train.labels, 2, FoldMode::ClassWise, 2);
    const CvResult r = cross_validate(p.seen_train, p.seen_embeddings, g, plan, quick_settings());
    CHECK(r.cells[0].failed);
    CHECK_FALSE(r.cells[0].error.empty());
    CHECK(r.cells[0].mean == -std::numeric_limits<double>::infinity());
    CHECK(r.cells[1].mean == r.cells[2].mean);
    CHECK(r.best_index == 1);

    std::ostringstream os;
    write_cv_report(os, r);
    std::istringstream lines(os.str());
    std::string header, row;
    std::getline(lines, header);
    CHECK(header == "lambda\tsigma\teta\tgamma\tT\tfold_0\tfold_1\tmean\tstatus");
    int rows = 0;
    std::string status;
    while (std::getline(lines, row)) {
        ++rows;
        status += row.substr(row.rfind('\t') + 1) + ",";
    }
    CHECK(rows == 3);
    CHECK(status == "failed,best,ok,");
}

TEST_CASE("cross-validation is independent of the thread count") {
    const auto p = small_problem(5);
    HyperGrid g;
    g.lambda_values = {0.1, 1.0};
    g.sigma_values = {0.5, 2.0};
    const FoldPlan plan = make_folds(p.seen_train.labels, 3, FoldMode::SampleWise, 9);
    const int before = worker_count();
    set_worker_count(1);
    const CvResult one = cross_validate(p.seen_train, p.seen_embeddings, g, plan, quick_settings());
    set_worker_count(4);
    const CvResult four = cross_validate(p.seen_train, p.seen_embeddings, g, plan, quick_settings());
    set_worker_count(before);
    for (std::size_t i = 0; i < one.cells.size(); ++i) CHECK(one.cells[i].fold_scores == four.cells[i].fold_scores);
    CHECK(one.best_index == four.best_index);
}

TEST_CASE("conse T stage fits every cell") {
    const auto p = small_problem(6);
    HyperGrid g;
    g.conse_T_values = {1, 3, 50};
    CvSettings s = quick_settings();
    s.stage = CvStage::ConseT;
    const FoldPlan plan = make_folds(p.seen_train.labels, 2, FoldMode::ClassWise, 3);
    const CvResult r = cross_validate(p.seen_train, p.seen_embeddings, g, plan, s);
    REQUIRE(r.cells.size() == 3);
    for (const auto& c : r.cells) {
        CHECK_FALSE(c.failed);
        CHECK(c.mean >= 0.0);
        CHECK(c.mean <= 1.0);
    }
}
