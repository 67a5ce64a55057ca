#pragma once

#include "langdiff/data.hpp"
#include "langdiff/error.hpp"
#include "langdiff/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

namespace testing {

/// Code of the langdiff::Error thrown by f, or nothing if it returned.
template <class F>
std::optional<langdiff::Errc> error_code(F&& f) {
    try {
        f();
    } catch (const langdiff::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline langdiff::SurprisalTable table_from(const std::string& tsv) {
    std::istringstream in(tsv);
    return langdiff::read_surprisal_table(in);
}

/// Largest relative discrepancy between the analytic gradient of one cell and
/// central differences with step h. Components whose magnitude is below
/// `floor` are compared on the absolute scale `floor`.
inline double gradient_rel_error(const langdiff::ModelSpec& spec, double log_n, double d,
                                 double log_sigma2, double y, double h = 1e-5,
                                 double floor = 1e-6) {
    using langdiff::cell_value;
    const langdiff::CellEval e = langdiff::evaluate_cell(spec, log_n, d, log_sigma2, y);
    const double fd[3] = {
        (cell_value(spec, log_n + h, d, log_sigma2, y) - cell_value(spec, log_n - h, d, log_sigma2, y)) / (2 * h),
        (cell_value(spec, log_n, d + h, log_sigma2, y) - cell_value(spec, log_n, d - h, log_sigma2, y)) / (2 * h),
        (cell_value(spec, log_n, d, log_sigma2 + h, y) - cell_value(spec, log_n, d, log_sigma2 - h, y)) / (2 * h),
    };
    const double an[3] = {e.d_log_n, e.d_d, e.d_log_sigma2};
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double scale = std::max({std::abs(an[k]), std::abs(fd[k]), floor});
        worst = std::max(worst, std::abs(an[k] - fd[k]) / scale);
    }
    return worst;
}

/// Relative error of the whole gradient vector, |g - g_fd| / max(|g|, |g_fd|),
/// with central differences of step h.
inline double gradient_norm_rel_error(const langdiff::ModelSpec& spec, double log_n, double d,
                                      double log_sigma2, double y, double h = 1e-5) {
    using langdiff::cell_value;
    const langdiff::CellEval e = langdiff::evaluate_cell(spec, log_n, d, log_sigma2, y);
    const double fd[3] = {
        (cell_value(spec, log_n + h, d, log_sigma2, y) - cell_value(spec, log_n - h, d, log_sigma2, y)) / (2 * h),
        (cell_value(spec, log_n, d + h, log_sigma2, y) - cell_value(spec, log_n, d - h, log_sigma2, y)) / (2 * h),
        (cell_value(spec, log_n, d, log_sigma2 + h, y) - cell_value(spec, log_n, d, log_sigma2 - h, y)) / (2 * h),
    };
    const double an[3] = {e.d_log_n, e.d_d, e.d_log_sigma2};
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (int k = 0; k < 3; ++k) {
        diff += (an[k] - fd[k]) * (an[k] - fd[k]);
        na += an[k] * an[k];
        nf += fd[k] * fd[k];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nf), 1e-300});
}

} // namespace testing

#include <random>

namespace testing {

struct CellDraw {
    double log_n, d, log_sigma2, y;
};

/// Random (params, cell) draw with a residual of typical size for the model.
/// Points within `margin` of a kink (z = 0 for the Laplace residual, |z| = delta
/// for the Huber one) are redrawn: central differences straddling a kink do not
/// estimate a derivative.
inline CellDraw draw_cell(const langdiff::ModelSpec& spec, std::mt19937_64& rng, double margin = 1e-3) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (true) {
        CellDraw c;
        c.log_n = -1.0 + 6.0 * u01(rng);
        c.d = -0.5 + u01(rng);
        c.log_sigma2 = -7.0 + 7.0 * u01(rng);
        const langdiff::IntentTerms t = langdiff::intent_terms(spec, c.log_n, c.log_sigma2);
        const double z = 2.0 * std::sqrt(t.v) * normal(rng);
        c.y = std::exp(c.log_n + c.d + t.mu + z);
        const double hinge = spec.kind == langdiff::ModelKind::M2L  ? std::abs(z)
                             : spec.kind == langdiff::ModelKind::M3 ? std::abs(std::abs(z) - spec.huber_delta)
                                                                    : 1.0;
        // The kink moves with every parameter; keep the draw if a 1e-5 step cannot reach it.
        if (hinge > margin) return c;
    }
}

} // namespace testing
