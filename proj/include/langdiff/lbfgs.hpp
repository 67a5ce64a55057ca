#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace langdiff {

/// f(x), writing the gradient into g.
using GradientFunction = std::function<double(std::span<const double> x, std::span<double> g)>;

/// Keeps iterates on an affine subspace. `tangent` projects a vector onto the
/// subspace directions; `retract` moves a point back onto the subspace to
/// remove rounding drift.
struct Projection {
    std::function<void(std::span<double>)> tangent;
    std::function<void(std::span<double>)> retract;
};

struct LbfgsOptions {
    std::size_t memory = 10;
    std::size_t max_iter = 2000;
    /// Stop when the (projected) gradient 2-norm falls below this.
    double grad_tol = 1e-6;
    /// Stop when the relative decrease of f over the last `stall_window`
    /// iterations is below this (catches optima at kinks, where the gradient
    /// does not vanish).
    double f_rel_tol = 1e-12;
    std::size_t stall_window = 10;
    /// Optional diagonal of the initial inverse Hessian; empty means identity.
    /// Must be uniform on any block the projection averages over.
    std::vector<double> h0_diag;
    double c1 = 1e-4; ///< sufficient decrease
    double c2 = 0.9;  ///< curvature (strong Wolfe)
    std::size_t max_linesearch = 40;
    bool record_history = false;
};

enum class LbfgsStatus {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
    NonFiniteStart,
};

struct LbfgsResult {
    double value = 0.0;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    /// f at every accepted iterate, starting with the initial point.
    std::vector<double> history;

    bool converged() const noexcept {
        return status == LbfgsStatus::GradientTolerance ||
               status == LbfgsStatus::FunctionTolerance;
    }
};

/// Limited-memory BFGS minimisation with a strong-Wolfe line search
/// (bracketing + cubic-interpolation zoom). x is updated in place and holds the
/// best accepted iterate on return.
LbfgsResult minimize_lbfgs(const GradientFunction& f, std::span<double> x,
                           const LbfgsOptions& options, const Projection* projection = nullptr);

} // namespace langdiff
