#pragma once

#include "langdiff/data.hpp"
#include "langdiff/kernels.hpp"
#include "langdiff/lbfgs.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace langdiff {

/// Affine constraint on the difficulties.
enum class Constraint {
    SumZero, ///< sum_j d_j = 0
    SumJ,    ///< sum_j d_j = J (the "simplex" normalisation)
    None,    ///< unconstrained; M1 then has a free common shift
};

std::string_view to_string(Constraint c) noexcept;
/// Accepts "sum-zero"/"sum_zero", "sum-J"/"sum_J", "none".
Constraint parse_constraint(std::string_view name);

enum class Init { Sensible, Random };

struct FitConfig {
    Constraint constraint = Constraint::SumZero;
    Init init = Init::Sensible;
    /// Extra runs after the first; run r > 0 starts from a random point.
    unsigned restarts = 1;
    /// Gradient-norm threshold on the per-cell mean negative log-likelihood.
    double tol = 1e-6;
    unsigned max_iter = 2000;
    std::uint64_t seed = 0;
    /// Record the objective after every accepted iteration.
    bool record_history = false;

    void validate() const;
};

struct FitResult {
    Params params;
    std::vector<std::string> intents;
    std::vector<std::string> corpora;
    ModelSpec spec;
    FitConfig config;
    double total_loglik = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    /// Gradient 2-norm of the per-cell mean objective at the returned point.
    double grad_norm = 0.0;
    std::size_t num_cells = 0;
    /// Index of the run (0 = first init) that produced this result.
    unsigned best_run = 0;
    /// Per accepted iteration of the best run (log-likelihood scale); only
    /// filled when config.record_history is set.
    std::vector<double> history;
    std::vector<std::string> warnings;

    double sigma2() const noexcept { return params.sigma2(); }
    /// (corpus id, d_j) pairs in corpus order.
    std::vector<std::pair<std::string, double>> difficulties() const;
};

/// Target of sum_j d_j under the constraint (0 when unconstrained).
double constraint_target(Constraint c, std::size_t num_corpora) noexcept;

/// The "sensible" starting point: log n_i = mean_j ln y_ij - mean d, d at the
/// constraint's centre, sigma2 = sample variance of the initial residuals.
Params sensible_init(const SurprisalTable& table, Constraint constraint);

/// Joint MAP estimate of (log n, d, log sigma2). Runs restarts + 1 times and
/// keeps the run with the highest total log-likelihood. Non-convergence is
/// reported through FitResult::converged, not thrown.
FitResult fit_map(const SurprisalTable& table, const ModelSpec& spec, const FitConfig& config);

struct HeldoutResult {
    double total_loglik = 0.0;
    std::vector<std::string> intents;
    std::vector<double> log_n;
    std::size_t num_cells = 0;
};

/// Held-out log-likelihood with d and sigma2 frozen from `train_fit`; every
/// held-out intent's n_i is refitted independently by a 1-D MAP search.
HeldoutResult heldout_eval(const FitResult& train_fit, const ModelSpec& spec,
                           const SurprisalTable& heldout, const FitConfig& config);

/// d_est shifted by the constant that makes its mean equal d_ref's.
std::vector<double> gauge_align(std::span<const double> d_est, std::span<const double> d_ref);

} // namespace langdiff
