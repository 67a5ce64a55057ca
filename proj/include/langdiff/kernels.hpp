#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace langdiff {

enum class ModelKind {
    M1,  ///< homoscedastic log-normal residual
    M2,  ///< heteroscedastic, Fenton-Wilkinson moments
    M2L, ///< Laplace residual with the M2 mean and variance
    M3,  ///< M2 with a Huber-composite (Gaussian + sparse Laplace) residual penalty
};

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "m1", "m2", "m2l", "m3" (case-insensitive).
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
    ModelKind kind = ModelKind::M2;
    /// M3: residual magnitude (in log space, about the mean) where the
    /// penalty switches from quadratic to linear.
    double huber_delta = 0.1;
    /// M3: scale of the sparse Laplace noise on log intent size. Carried for
    /// reporting; the residual penalty is fully determined by huber_delta.
    double laplace_b = 1.0;

    /// Throws InvalidConfig when the M3 hyperparameters are not finite and > 0.
    void validate() const;
};

/// Lower bound added to exp(log_sigma2); keeps exactly-fittable data finite.
inline constexpr double kSigma2Floor = 1e-8;

inline double sigma2_from_log(double log_sigma2) noexcept {
    return kSigma2Floor + std::exp(log_sigma2);
}

/// Model parameters in unconstrained coordinates.
struct Params {
    std::vector<double> log_n; ///< per intent: log of intent size n_i
    std::vector<double> d;     ///< per corpus: difficulty d_j
    double log_sigma2 = 0.0;   ///< sigma^2 = kSigma2Floor + exp(log_sigma2)

    double sigma2() const noexcept;
};

struct FentonWilkinson {
    double mu;       ///< mean of the per-intent log residual
    double sigma_i2; ///< variance of the per-intent log residual
};

/// Log-normal matching the mean and variance of (1/n) * sum of n iid
/// exp(N(0, sigma2)) terms. n may be any positive real; sigma2 = 0 is the
/// noiseless limit.
FentonWilkinson fenton_wilkinson(double sigma2, double n);

/// Value of the log-density together with its partial derivatives.
struct CellEval {
    double logp = 0.0;
    double d_log_n = 0.0;
    double d_d = 0.0;
    double d_log_sigma2 = 0.0;
};

/// Quantities shared by every cell of one intent: residual mean and variance
/// with their sensitivities, and the family's normalising constant.
struct IntentTerms {
    double mu = 0.0, v = 1.0, inv_v = 1.0, inv_b = 0.0;
    double v_log_n = 0.0, v_s = 1.0;
    double z_log_n = -1.0, z_s = 0.0;
    double e_ls = 1.0;
    double log_norm = 0.0;
};

IntentTerms intent_terms(const ModelSpec& spec, double log_n, double log_sigma2) noexcept;

/// Cell evaluation given precomputed intent terms and ln y.
CellEval evaluate_cell(const ModelSpec& spec, const IntentTerms& terms, double log_n, double d,
                       double log_y) noexcept;
double cell_value(const ModelSpec& spec, const IntentTerms& terms, double log_n, double d,
                  double log_y) noexcept;

/// Log-density of one observation y (a density over y, including the -ln y
/// Jacobian) and its gradient with respect to (log n_i, d_j, log sigma2).
/// No argument validation; y must be > 0.
CellEval evaluate_cell(const ModelSpec& spec, double log_n, double d, double log_sigma2,
                       double y) noexcept;

/// Same as evaluate_cell without computing derivatives.
double cell_value(const ModelSpec& spec, double log_n, double d, double log_sigma2,
                  double y) noexcept;

/// Checked per-cell API. Throws DomainError on y <= 0 or out-of-range indices.
double cell_logdensity(const ModelSpec& spec, const Params& params, std::size_t i,
                       std::size_t j, double y);

struct CellGradient {
    double log_n;
    double d;
    double log_sigma2;
};

CellGradient cell_gradient(const ModelSpec& spec, const Params& params, std::size_t i,
                           std::size_t j, double y);

/// Huber loss: a^2/2 for |a| <= delta, delta * (|a| - delta/2) beyond.
double huber(double a, double delta) noexcept;

} // namespace langdiff
