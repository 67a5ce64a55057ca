#include "langdiff/lbfgs.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace langdiff;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        const double a = x[k + 1] - x[k] * x[k], b = 1.0 - x[k];
        f += 100.0 * a * a + b * b;
        g[k] += -400.0 * a * x[k] - 2.0 * b;
        g[k + 1] += 200.0 * a;
    }
    return f;
}

} // namespace

TEST_CASE("Rosenbrock") {
    std::vector<double> x{-1.2, 1.0, -1.2, 1.0};
    LbfgsOptions opt;
    opt.grad_tol = 1e-9;
    opt.record_history = true;
    const auto r = minimize_lbfgs(rosenbrock, x, opt);
    CHECK(r.status == LbfgsStatus::GradientTolerance);
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
    CHECK(r.history.size() == r.iterations + 1);
}

TEST_CASE("projection keeps an affine constraint") {
    // min sum (x_k - c_k)^2 subject to sum x = 3.
    const std::vector<double> c{0.4, -1.0, 2.5, 0.1};
    const auto f = [&](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            v += (x[k] - c[k]) * (x[k] - c[k]);
            g[k] = 2.0 * (x[k] - c[k]);
        }
        return v;
    };
    const auto mean_out = [](std::span<double> v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        for (double& x : v) x -= m;
    };
    Projection proj{mean_out, [](std::span<double> v) {
                        const double s = (std::accumulate(v.begin(), v.end(), 0.0) - 3.0) / v.size();
                        for (double& x : v) x -= s;
                    }};
    std::vector<double> x{0.75, 0.75, 0.75, 0.75};
    const auto r = minimize_lbfgs(f, x, LbfgsOptions{}, &proj);
    CHECK(r.converged());
    CHECK(std::accumulate(x.begin(), x.end(), 0.0) == doctest::Approx(3.0).epsilon(1e-12));
    const double shift = (3.0 - 2.0) / 4.0; // c sums to 2
    for (std::size_t k = 0; k < 4; ++k) CHECK(x[k] == doctest::Approx(c[k] + shift).epsilon(1e-6));
}

TEST_CASE("diagonal preconditioning on a badly scaled quadratic") {
    const std::size_t n = 200;
    std::vector<double> scale(n);
    for (std::size_t k = 0; k < n; ++k) scale[k] = std::pow(10.0, 6.0 * k / (n - 1));
    const auto f = [&](std::span<const double> x, std::span<double> g) {
        double v = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            v += 0.5 * scale[k] * (x[k] - 1.0) * (x[k] - 1.0);
            g[k] = scale[k] * (x[k] - 1.0);
        }
        return v;
    };
    LbfgsOptions plain;
    plain.grad_tol = 1e-8;
    plain.max_iter = 20000;
    LbfgsOptions pre = plain;
    for (std::size_t k = 0; k < n; ++k) pre.h0_diag.push_back(1.0 / scale[k]);

    std::vector<double> a(n, 0.0), b(n, 0.0);
    const auto ra = minimize_lbfgs(f, a, plain);
    const auto rb = minimize_lbfgs(f, b, pre);
    CHECK(rb.status == LbfgsStatus::GradientTolerance);
    CHECK(rb.iterations <= 3);
    CHECK(rb.iterations < ra.iterations);
    for (double v : b) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kinked objective terminates early without losing ground") {
    // Once an iterate sits on the kink of |x0| no usable Wolfe step exists;
    // the run must end promptly instead of spinning to the iteration cap.
    const auto f = [](std::span<const double> x, std::span<double> g) {
        g[0] = x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0);
        g[1] = 2.0 * x[1];
        return std::abs(x[0]) + x[1] * x[1];
    };
    std::vector<double> x{0.7, -0.3};
    LbfgsOptions opt;
    opt.max_iter = 500;
    opt.record_history = true;
    const auto r = minimize_lbfgs(f, x, opt);
    CHECK(r.status != LbfgsStatus::MaxIterations);
    CHECK(r.iterations < 50);
    CHECK(r.value < 0.7 + 0.09);
    CHECK(std::abs(x[0]) < 1e-12);
    for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);
}

TEST_CASE("non-finite start") {
    std::vector<double> x{1.0};
    const auto r = minimize_lbfgs(
        [](std::span<const double>, std::span<double> g) {
            g[0] = 0.0;
            return std::numeric_limits<double>::quiet_NaN();
        },
        x, LbfgsOptions{});
    CHECK(r.status == LbfgsStatus::NonFiniteStart);
    CHECK_FALSE(r.converged());
}

TEST_CASE("iteration cap") {
    std::vector<double> x{-1.2, 1.0};
    LbfgsOptions opt;
    opt.max_iter = 3;
    const auto r = minimize_lbfgs(rosenbrock, x, opt);
    CHECK(r.status == LbfgsStatus::MaxIterations);
    CHECK(r.iterations == 3);
}
