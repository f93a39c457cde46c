#include "phantom/optimize.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace phantom {

std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::LineSearchStalled: return "line_search_stalled";
    }
    return "unknown";
}

namespace {

void require_finite(double fx, const Matrix& g, const char* where) {
    if (!std::isfinite(fx)) fail(ErrorKind::NonFinite, std::string(where) + ": objective is not finite");
    if (!g.allFinite()) fail(ErrorKind::NonFinite, std::string(where) + ": gradient is not finite");
}

// Barzilai-Borwein step from the last accepted move, falling back to growing
// the previous step when curvature along the move is not positive.
double bb_step(const Matrix& s, const Matrix& y, double prev) {
    const double sy = (s.array() * y.array()).sum();
    const double ss = s.squaredNorm();
    if (sy > 0.0 && ss > 0.0) return ss / sy;
    return prev * 2.0;
}

} // namespace

Matrix soft_threshold(const Matrix& x, double tau) {
    return x.unaryExpr([tau](double v) {
        if (v > tau) return v - tau;
        if (v < -tau) return v + tau;
        return 0.0;
    });
}

namespace {

double dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

// Two-loop recursion: d = -H g from the stored (s, y) pairs, oldest first.
Matrix lbfgs_direction(const Matrix& g, const std::deque<Matrix>& s, const std::deque<Matrix>& y,
                       const std::deque<double>& rho) {
    const std::size_t m = s.size();
    std::vector<double> alpha(m);
    Matrix q = g;
    for (std::size_t i = m; i-- > 0;) {
        alpha[i] = rho[i] * dot(s[i], q);
        q -= alpha[i] * y[i];
    }
    q *= dot(s.back(), y.back()) / y.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * dot(y[i], q);
        q += (alpha[i] - beta) * s[i];
    }
    return -q;
}

} // namespace

DescentReport gradient_descent(const ObjectiveFn& f, Matrix& x, const DescentOptions& opts) {
    DescentReport rep;
    Matrix g(x.rows(), x.cols());
    double fx = f(x, g);
    require_finite(fx, g, "gradient descent start");
    rep.initial_objective = fx;
    if (opts.keep_trace) rep.trace.push_back(fx);

    const double g0 = g.norm();
    double bb = g0 > 0.0 ? 1.0 / g0 : 1.0;
    Matrix trial(x.rows(), x.cols()), g_trial(x.rows(), x.cols());
    Matrix x_prev, g_prev;
    std::deque<Matrix> hist_s, hist_y;
    std::deque<double> hist_rho;

    rep.reason = StopReason::MaxIterations;
    for (int it = 0; it < opts.max_iters; ++it) {
        const double gnorm = g.norm();
        if (gnorm <= opts.grad_tol) {
            rep.converged = true;
            rep.reason = StopReason::GradientTolerance;
            break;
        }
        Matrix dir;
        double step = 1.0;
        double slope = 0.0;
        if (!hist_s.empty()) {
            dir = lbfgs_direction(g, hist_s, hist_y, hist_rho);
            slope = dot(g, dir);
        }
        if (hist_s.empty() || !(slope < 0.0)) {
            // Steepest descent: first iteration, no memory, or a non-descent
            // quasi-Newton direction (possible on the non-smooth losses).
            hist_s.clear();
            hist_y.clear();
            hist_rho.clear();
            if (it > 0) bb = bb_step(x - x_prev, g - g_prev, bb);
            dir = -g;
            step = bb;
            slope = -gnorm * gnorm;
        }

        bool accepted = false;
        double f_trial = 0.0;
        while (step >= opts.min_step) {
            trial = x + step * dir;
            f_trial = f(trial, g_trial);
            if (std::isfinite(f_trial) && f_trial <= fx + opts.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted) {
            rep.reason = StopReason::LineSearchStalled;
            break;
        }
        require_finite(f_trial, g_trial, "gradient descent step");
        x_prev = x;
        g_prev = g;
        x.swap(trial);
        g.swap(g_trial);
        fx = f_trial;
        rep.iterations = it + 1;
        if (opts.keep_trace) rep.trace.push_back(fx);

        if (opts.memory > 0) {
            Matrix sk = x - x_prev, yk = g - g_prev;
            const double sy = dot(sk, yk);
            if (sy > 1e-12 * sk.norm() * yk.norm()) {
                hist_s.push_back(std::move(sk));
                hist_y.push_back(std::move(yk));
                hist_rho.push_back(1.0 / sy);
                if (static_cast<int>(hist_s.size()) > opts.memory) {
                    hist_s.pop_front();
                    hist_y.pop_front();
                    hist_rho.pop_front();
                }
            }
        }
    }
    rep.final_objective = fx;
    rep.grad_norm = g.norm();
    if (rep.grad_norm <= opts.grad_tol) {
        rep.converged = true;
        rep.reason = StopReason::GradientTolerance;
    }
    return rep;
}

DescentReport proximal_gradient(const ObjectiveFn& f, double l1, Matrix& x, const DescentOptions& opts) {
    DescentReport rep;
    Matrix g(x.rows(), x.cols());
    double fx = f(x, g);
    require_finite(fx, g, "proximal gradient start");
    rep.initial_objective = fx + l1 * x.lpNorm<1>();
    if (opts.keep_trace) rep.trace.push_back(rep.initial_objective);

    const double g0 = g.norm();
    double step = g0 > 0.0 ? 1.0 / g0 : 1.0;
    Matrix z(x.rows(), x.cols()), g_z(x.rows(), x.cols());
    Matrix x_prev, g_prev;
    double mapping_norm = 0.0;

    rep.reason = StopReason::MaxIterations;
    for (int it = 0; it < opts.max_iters; ++it) {
        if (it > 0) step = bb_step(x - x_prev, g - g_prev, step);

        bool accepted = false;
        double f_z = 0.0;
        while (step >= opts.min_step) {
            z = soft_threshold(x - step * g, step * l1);
            const Matrix d = z - x;
            f_z = f(z, g_z);
            const double bound = fx + (g.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
            if (std::isfinite(f_z) && f_z <= bound) {
                accepted = true;
                mapping_norm = d.norm() / step;
                break;
            }
            step *= opts.shrink;
        }
        if (!accepted) {
            rep.reason = StopReason::LineSearchStalled;
            break;
        }
        require_finite(f_z, g_z, "proximal gradient step");
        // The bound implies F(z) <= F(x) in exact arithmetic; at convergence
        // rounding can flip it, and the trace must stay monotone.
        if (f_z + l1 * z.lpNorm<1>() > fx + l1 * x.lpNorm<1>()) {
            rep.converged = true;
            rep.reason = StopReason::GradientTolerance;
            break;
        }
        x_prev = x;
        g_prev = g;
        x.swap(z);
        g.swap(g_z);
        fx = f_z;
        rep.iterations = it + 1;
        if (opts.keep_trace) rep.trace.push_back(fx + l1 * x.lpNorm<1>());
        if (mapping_norm <= opts.grad_tol) {
            rep.converged = true;
            rep.reason = StopReason::GradientTolerance;
            break;
        }
    }
    rep.final_objective = fx + l1 * x.lpNorm<1>();
    rep.grad_norm = mapping_norm;
    return rep;
}

} // namespace phantom
