#pragma once

#include "langdiff/data.hpp"
#include "langdiff/fit.hpp"
#include "langdiff/kernels.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace langdiff {

struct Missingness {
    enum class Type { None, Mcar, Mar };
    Type type = Type::None;
    /// Baseline probability that a cell is missing.
    double rate = 0.0;
    /// MAR only: logistic slope on the standardised log intent size. The sign
    /// alternates over corpora (+ for even j, - for odd j), so even corpora
    /// tend to lose large intents and odd corpora small ones.
    double bias = 0.0;
};

struct Outliers {
    double fraction = 0.0;       ///< probability that a cell is corrupted
    double log_multiplier = 0.0; ///< corrupted cells are scaled by exp(+-log_multiplier)
};

struct SynthConfig {
    std::size_t intents = 1000;
    std::size_t corpora = 10;
    /// Explicit difficulties; when empty they are drawn N(0, d_sd^2) and centred.
    std::vector<double> d_true;
    double d_sd = 0.1;
    /// Intent sizes are log-normal with this median and log-scale spread.
    double n_median = 20.0;
    double n_log_sd = 1.0;
    /// Round n_i to integers >= 1; M2 then uses the exact sum of n_i log-normal terms.
    bool integer_n = false;
    double sigma2 = 0.01;
    ModelKind kind = ModelKind::M2;
    Missingness missing;
    std::optional<Outliers> outliers;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;
};

struct SynthTable {
    SurprisalTable table;
    /// Ground truth, indexed like `table`. log_sigma2 = ln(sigma2).
    Params truth;
};

/// Draws a surprisal table from the generative form of the chosen model, then
/// applies outliers and the missingness mask. Rows left with fewer than two
/// observed cells have their mask redrawn. Deterministic in config.seed.
SynthTable generate_table(const SynthConfig& config);

struct RecoveryReport {
    double max_abs_d_err = 0.0;
    double rmse_d = 0.0;
    double rank_corr_d = 0.0; ///< Spearman rho between true and estimated d
    double rel_err_sigma2 = 0.0;
};

/// Errors of a fit against ground truth after gauge alignment of d. Truth and
/// fit must index corpora identically.
RecoveryReport recovery_report(const Params& truth, const FitResult& fit);

} // namespace langdiff
