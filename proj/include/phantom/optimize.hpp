#pragma once

#include "phantom/core.hpp"

#include <functional>
#include <string_view>
#include <vector>

namespace phantom {

enum class StopReason { GradientTolerance, MaxIterations, LineSearchStalled };

std::string_view to_string(StopReason r);

// Full-batch descent with Armijo backtracking along an L-BFGS direction
// (memory = 0 gives plain steepest descent with a Barzilai-Borwein trial
// step). Every accepted step satisfies
//   f(x + t d) <= f(x) + armijo * t * <g, d>,  <g, d> < 0,
// so the objective trace is non-increasing.
struct DescentOptions {
    int max_iters = 500;
    double grad_tol = 1e-6;
    double shrink = 0.5;
    double armijo = 1e-4;
    double min_step = 1e-20;
    int memory = 10;
    bool keep_trace = false;
};

struct DescentReport {
    int iterations = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double grad_norm = 0.0;
    bool converged = false;
    StopReason reason = StopReason::MaxIterations;
    std::vector<double> trace; // accepted objective values, starting with the initial one
};

// Objective callback: returns f(x) and writes the (sub)gradient into `grad`.
using ObjectiveFn = std::function<double(const Matrix& x, Matrix& grad)>;

// Minimizes in place. Throws NonFinite if f or its gradient at an accepted
// point is NaN/Inf.
DescentReport gradient_descent(const ObjectiveFn& f, Matrix& x, const DescentOptions& opts);

// L1-regularized variant: minimizes f(x) + l1 * ||x||_1 by proximal gradient
// with backtracking on the quadratic upper bound.
DescentReport proximal_gradient(const ObjectiveFn& f, double l1, Matrix& x, const DescentOptions& opts);

Matrix soft_threshold(const Matrix& x, double tau);

} // namespace phantom
