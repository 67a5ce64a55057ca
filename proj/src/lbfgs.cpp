#include "langdiff/lbfgs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace langdiff {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Minimiser of the cubic interpolating (a, fa, ga) and (b, fb, gb), clamped
/// into the safeguarded interior of [a, b].
double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    double t = 0.5 * (a + b);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = gb - ga + 2.0 * d2;
        if (denom != 0.0) t = b - (b - a) * (gb + d2 - d1) / denom;
    }
    if (!std::isfinite(t)) t = 0.5 * (a + b);
    return std::clamp(t, lo + margin, hi - margin);
}

struct LineSearch {
    const GradientFunction& f;
    std::span<const double> x0;
    std::span<const double> dir;
    const LbfgsOptions& opt;
    std::vector<double>& x;
    std::vector<double>& g;
    std::size_t evaluations = 0;

    struct Point {
        double alpha, f, df;
    };

    Point probe(double alpha) {
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = x0[k] + alpha * dir[k];
        const double fx = f(x, g);
        ++evaluations;
        return {alpha, std::isfinite(fx) ? fx : std::numeric_limits<double>::infinity(),
                std::isfinite(fx) ? dot(g, dir) : std::numeric_limits<double>::quiet_NaN()};
    }

    /// Returns the accepted step (x and g hold the point), or nothing.
    bool run(double f0, double df0, double alpha_init, Point& accepted) {
        const double armijo = opt.c1 * df0;
        const double curvature = -opt.c2 * df0;
        Point prev{0.0, f0, df0};
        double alpha = alpha_init;
        for (std::size_t it = 0; it < opt.max_linesearch; ++it) {
            Point cur = probe(alpha);
            if (!std::isfinite(cur.f)) {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if (cur.f > f0 + cur.alpha * armijo || (it > 0 && cur.f >= prev.f))
                return zoom(prev, cur, f0, armijo, curvature, accepted);
            if (std::abs(cur.df) <= curvature) {
                accepted = cur;
                return true;
            }
            if (cur.df >= 0.0) return zoom(cur, prev, f0, armijo, curvature, accepted);
            prev = cur;
            alpha *= 2.0;
        }
        return false;
    }

    bool zoom(Point lo, Point hi, double f0, double armijo, double curvature, Point& accepted) {
        for (std::size_t it = 0; it < opt.max_linesearch; ++it) {
            double alpha;
            if (std::isfinite(hi.f) && std::isfinite(hi.df))
                alpha = cubic_step(lo.alpha, lo.f, lo.df, hi.alpha, hi.f, hi.df);
            else
                alpha = 0.5 * (lo.alpha + hi.alpha);
            if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
            Point cur = probe(alpha);
            if (cur.f > f0 + cur.alpha * armijo || cur.f >= lo.f) {
                hi = cur;
                continue;
            }
            if (std::abs(cur.df) <= curvature) {
                accepted = cur;
                return true;
            }
            if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = cur;
        }
        // Fall back to the best point with sufficient decrease, if any.
        if (lo.alpha > 0.0 && lo.f < f0) {
            accepted = probe(lo.alpha);
            return accepted.f == lo.f;
        }
        return false;
    }
};

} // namespace

LbfgsResult minimize_lbfgs(const GradientFunction& f, std::span<double> x_io,
                           const LbfgsOptions& opt, const Projection* projection) {
    const std::size_t n = x_io.size();
    const auto tangent = [&](std::span<double> v) {
        if (projection && projection->tangent) projection->tangent(v);
    };

    LbfgsResult result;
    std::vector<double> x(x_io.begin(), x_io.end());
    std::vector<double> g(n), x_new(n), g_new(n), dir(n);
    double fx = f(x, g);
    ++result.evaluations;
    tangent(g);
    if (!std::isfinite(fx)) {
        result.status = LbfgsStatus::NonFiniteStart;
        result.value = fx;
        return result;
    }
    if (opt.record_history) result.history.push_back(fx);

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::vector<double> alpha_buf(opt.memory);

    const bool precond = !opt.h0_diag.empty();
    if (precond && opt.h0_diag.size() != n) throw std::invalid_argument("h0_diag has the wrong size");
    bool precond_step = precond;
    std::deque<double> f_window{fx};

    double gnorm = norm2(g);
    result.status = LbfgsStatus::MaxIterations;
    bool reset_once = false;
    while (true) {
        if (gnorm <= opt.grad_tol) {
            result.status = LbfgsStatus::GradientTolerance;
            break;
        }
        if (result.iterations >= opt.max_iter) break;

        // Two-loop recursion: dir = -H g.
        std::copy(g.begin(), g.end(), dir.begin());
        const std::size_t m = s_hist.size();
        for (std::size_t k = m; k-- > 0;) {
            alpha_buf[k] = rho_hist[k] * dot(s_hist[k], dir);
            for (std::size_t t = 0; t < n; ++t) dir[t] -= alpha_buf[k] * y_hist[k][t];
        }
        double gamma = 1.0;
        if (m > 0) {
            const auto& y = y_hist[m - 1];
            double yhy = 0.0;
            for (std::size_t t = 0; t < n; ++t) yhy += y[t] * y[t] * (precond ? opt.h0_diag[t] : 1.0);
            gamma = 1.0 / (rho_hist[m - 1] * yhy);
        }
        for (std::size_t t = 0; t < n; ++t) dir[t] *= gamma * (precond ? opt.h0_diag[t] : 1.0);
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho_hist[k] * dot(y_hist[k], dir);
            for (std::size_t t = 0; t < n; ++t) dir[t] += (alpha_buf[k] - beta) * s_hist[k][t];
        }
        for (double& v : dir) v = -v;
        tangent(dir);

        double df0 = dot(g, dir);
        if (!(df0 < 0.0)) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear(), y_hist.clear(), rho_hist.clear();
            for (std::size_t t = 0; t < n; ++t) dir[t] = -g[t];
            df0 = -gnorm * gnorm;
            precond_step = false;
        }
        // A preconditioned first step approximates a Newton step; a plain
        // gradient step is capped at unit length.
        const double alpha0 = s_hist.empty() && !precond_step ? std::min(1.0, 1.0 / norm2(dir)) : 1.0;
        precond_step = precond;

        LineSearch ls{f, x, dir, opt, x_new, g_new};
        LineSearch::Point step{};
        const bool ok = ls.run(fx, df0, alpha0, step);
        result.evaluations += ls.evaluations;
        if (!ok) {
            if (!s_hist.empty() && !reset_once) {
                s_hist.clear(), y_hist.clear(), rho_hist.clear();
                reset_once = true;
                continue;
            }
            result.status = LbfgsStatus::LineSearchFailed;
            break;
        }
        reset_once = false;

        if (projection && projection->retract) projection->retract(x_new);
        tangent(g_new);

        std::vector<double> s(n), y(n);
        for (std::size_t t = 0; t < n; ++t) {
            s[t] = x_new[t] - x[t];
            y[t] = g_new[t] - g[t];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * norm2(s) * norm2(y)) {
            if (s_hist.size() == opt.memory) {
                s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }

        assert(step.f <= fx);
        x.swap(x_new);
        g.swap(g_new);
        fx = step.f;
        gnorm = norm2(g);
        ++result.iterations;
        if (opt.record_history) result.history.push_back(fx);

        if (gnorm <= opt.grad_tol) {
            result.status = LbfgsStatus::GradientTolerance;
            break;
        }
        f_window.push_back(fx);
        if (f_window.size() > opt.stall_window + 1) f_window.pop_front();
        if (f_window.size() == opt.stall_window + 1 &&
            f_window.front() - fx <= opt.f_rel_tol * std::max(1.0, std::abs(fx))) {
            result.status = LbfgsStatus::FunctionTolerance;
            break;
        }
    }

    std::copy(x.begin(), x.end(), x_io.begin());
    result.value = fx;
    result.grad_norm = gnorm;
    return result;
}

} // namespace langdiff
