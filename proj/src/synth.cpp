#include "langdiff/synth.hpp"

#include "langdiff/error.hpp"
#include "langdiff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace langdiff {

void SynthConfig::validate() const {
    const auto fail = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
    if (intents < 2 || corpora < 2) fail("need at least 2 intents and 2 corpora");
    if (!d_true.empty() && d_true.size() != corpora) fail("d_true length must equal corpora");
    for (double v : d_true)
        if (!std::isfinite(v)) fail("d_true must be finite");
    if (!(d_sd >= 0.0) || !std::isfinite(d_sd)) fail("d_sd must be >= 0");
    if (!(n_median > 0.0) || !std::isfinite(n_median)) fail("n_median must be > 0");
    if (!(n_log_sd >= 0.0) || !std::isfinite(n_log_sd)) fail("n_log_sd must be >= 0");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be >= 0");
    if (kind == ModelKind::M3) fail("generation supports m1, m2 and m2l only");
    if (missing.type != Missingness::Type::None && !(missing.rate >= 0.0 && missing.rate < 1.0))
        fail("missing rate must lie in [0, 1)");
    if (!std::isfinite(missing.bias)) fail("missing bias must be finite");
    if (outliers) {
        if (!(outliers->fraction >= 0.0 && outliers->fraction < 1.0))
            fail("outlier fraction must lie in [0, 1)");
        if (!std::isfinite(outliers->log_multiplier)) fail("outlier multiplier must be finite");
    }
}

namespace {

std::string padded_id(char prefix, std::size_t k, std::size_t count) {
    const std::size_t width = std::to_string(count - 1).size();
    std::string digits = std::to_string(k);
    return prefix + std::string(width - digits.size(), '0') + digits;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

} // namespace

SynthTable generate_table(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t I = cfg.intents, J = cfg.corpora;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> n(I), log_n(I);
    for (std::size_t i = 0; i < I; ++i) {
        double v = cfg.n_median * std::exp(cfg.n_log_sd * std_normal(rng));
        if (cfg.integer_n) v = std::max(1.0, std::round(v));
        n[i] = v;
        log_n[i] = std::log(v);
    }

    std::vector<double> d = cfg.d_true;
    if (d.empty()) {
        d.resize(J);
        double mean = 0.0;
        for (double& v : d) {
            v = cfg.d_sd * std_normal(rng);
            mean += v / static_cast<double>(J);
        }
        for (double& v : d) v -= mean;
    }

    const double sigma = std::sqrt(cfg.sigma2);
    std::vector<double> y(I * J);
    for (std::size_t i = 0; i < I; ++i) {
        const FentonWilkinson fw = fenton_wilkinson(cfg.sigma2, n[i]);
        for (std::size_t j = 0; j < J; ++j) {
            double value;
            if (cfg.kind == ModelKind::M1) {
                value = n[i] * std::exp(d[j] + sigma * std_normal(rng));
            } else if (cfg.kind == ModelKind::M2 && cfg.integer_n) {
                double sum = 0.0;
                const auto terms = static_cast<std::size_t>(n[i]);
                for (std::size_t k = 0; k < terms; ++k) sum += std::exp(sigma * std_normal(rng));
                value = std::exp(d[j]) * sum;
            } else if (cfg.kind == ModelKind::M2) {
                value = n[i] * std::exp(d[j] + fw.mu + std::sqrt(fw.sigma_i2) * std_normal(rng));
            } else {
                // Laplace(mu, b) with 2 b^2 = sigma_i2, by inverse CDF.
                const double b = std::sqrt(0.5 * fw.sigma_i2);
                const double u = unif(rng) - 0.5;
                const double eps =
                    b > 0.0 ? fw.mu - b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u)) : fw.mu;
                value = n[i] * std::exp(d[j] + eps);
            }
            if (cfg.outliers && unif(rng) < cfg.outliers->fraction) {
                const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
                value *= std::exp(sign * cfg.outliers->log_multiplier);
            }
            y[i * J + j] = value;
        }
    }

    // Missingness mask, one row at a time; rows with < 2 observed cells are redrawn.
    std::vector<char> observed(I * J, 1);
    if (cfg.missing.type != Missingness::Type::None) {
        const double base_logit = std::log(cfg.missing.rate) - std::log1p(-cfg.missing.rate);
        const double log_median = std::log(cfg.n_median);
        std::vector<double> p_missing(J);
        for (std::size_t i = 0; i < I; ++i) {
            for (std::size_t j = 0; j < J; ++j) {
                if (cfg.missing.type == Missingness::Type::Mcar) {
                    p_missing[j] = cfg.missing.rate;
                } else {
                    const double z = cfg.n_log_sd > 0.0 ? (log_n[i] - log_median) / cfg.n_log_sd : 0.0;
                    const double sign = j % 2 == 0 ? 1.0 : -1.0;
                    p_missing[j] = cfg.missing.rate == 0.0 ? 0.0
                                                           : logistic(base_logit + cfg.missing.bias * sign * z);
                }
            }
            for (int attempt = 0;; ++attempt) {
                if (attempt == 100000)
                    throw Error(Errc::InvalidConfig, "missingness leaves intents with < 2 cells");
                std::size_t count = 0;
                for (std::size_t j = 0; j < J; ++j) {
                    observed[i * J + j] = unif(rng) >= p_missing[j];
                    count += observed[i * J + j];
                }
                if (count >= 2) break;
            }
        }
    }

    std::vector<std::string> corpus_ids(J);
    for (std::size_t j = 0; j < J; ++j) corpus_ids[j] = padded_id('c', j, J);
    TableBuilder builder;
    for (std::size_t i = 0; i < I; ++i) {
        const std::string intent = padded_id('i', i, I);
        for (std::size_t j = 0; j < J; ++j)
            if (observed[i * J + j]) builder.add(intent, corpus_ids[j], y[i * J + j]);
    }

    SynthTable out;
    out.table = std::move(builder).build();
    out.truth.log_n = log_n;
    out.truth.log_sigma2 = std::log(cfg.sigma2);
    // The table orders corpora by first appearance; align the truth with it.
    out.truth.d.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        const auto& id = out.table.corpora()[j];
        out.truth.d[j] = d[static_cast<std::size_t>(
            std::find(corpus_ids.begin(), corpus_ids.end(), id) - corpus_ids.begin())];
    }
    return out;
}

RecoveryReport recovery_report(const Params& truth, const FitResult& fit) {
    if (truth.d.size() != fit.params.d.size() || truth.log_n.size() != fit.params.log_n.size())
        throw Error(Errc::DimensionMismatch, "truth and fit have different dimensions");
    RecoveryReport r;
    const auto aligned = gauge_align(fit.params.d, truth.d);
    double ss = 0.0;
    for (std::size_t j = 0; j < aligned.size(); ++j) {
        const double e = std::abs(aligned[j] - truth.d[j]);
        r.max_abs_d_err = std::max(r.max_abs_d_err, e);
        ss += e * e;
    }
    r.rmse_d = aligned.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(aligned.size()));
    r.rank_corr_d = spearman_rho(truth.d, fit.params.d);
    const double s_true = truth.sigma2();
    r.rel_err_sigma2 = std::abs(fit.sigma2() - s_true) / s_true;
    return r;
}

} // namespace langdiff
