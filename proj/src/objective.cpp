#include "langdiff/objective.hpp"

#include "langdiff/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <omp.h>

namespace langdiff {

Objective::Objective(const SurprisalTable& table, ModelSpec spec)
    : num_intents_(table.num_intents()), num_corpora_(table.num_corpora()), spec_(spec),
      offsets_(table.offsets().begin(), table.offsets().end()) {
    corpus_.reserve(table.num_cells());
    log_y_.reserve(table.num_cells());
    for (const Cell& c : table.cells()) {
        corpus_.push_back(c.corpus);
        log_y_.push_back(std::log(c.surprisal));
    }
}

double Objective::evaluate_serial(std::span<const double> x, std::span<double> grad) const {
    assert(x.size() == dimension());
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    const double log_sigma2 = x[num_intents_ + num_corpora_];
    double total = 0.0;
    for (std::size_t i = 0; i < num_intents_; ++i) {
        const IntentTerms t = intent_terms(spec_, x[i], log_sigma2);
        for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            const std::size_t j = num_intents_ + corpus_[k];
            if (!want_grad) {
                total += cell_value(spec_, t, x[i], x[j], log_y_[k]);
                continue;
            }
            const CellEval e = evaluate_cell(spec_, t, x[i], x[j], log_y_[k]);
            total += e.logp;
            grad[i] += e.d_log_n;
            grad[j] += e.d_d;
            grad[num_intents_ + num_corpora_] += e.d_log_sigma2;
        }
    }
    return total;
}

double Objective::evaluate(std::span<const double> x, std::span<double> grad) const {
    assert(x.size() == dimension());
    const bool want_grad = !grad.empty();
    const std::size_t J = num_corpora_;
    const std::size_t nblocks = (num_intents_ + kIntentBlock - 1) / kIntentBlock;
    const double log_sigma2 = x[num_intents_ + J];
    const double* d = x.data() + num_intents_;

    // Per block: [loglik, d_log_sigma2, d_d (J)].
    const std::size_t stride = J + 2;
    std::vector<double> partial(nblocks * stride, 0.0);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
        double* acc = partial.data() + b * stride;
        const std::size_t lo = b * kIntentBlock;
        const std::size_t hi = std::min(lo + kIntentBlock, num_intents_);
        for (std::size_t i = lo; i < hi; ++i) {
            double g_log_n = 0.0;
            const IntentTerms t = intent_terms(spec_, x[i], log_sigma2);
            for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
                const std::uint32_t j = corpus_[k];
                if (!want_grad) {
                    acc[0] += cell_value(spec_, t, x[i], d[j], log_y_[k]);
                    continue;
                }
                const CellEval e = evaluate_cell(spec_, t, x[i], d[j], log_y_[k]);
                acc[0] += e.logp;
                acc[1] += e.d_log_sigma2;
                acc[2 + j] += e.d_d;
                g_log_n += e.d_log_n;
            }
            if (want_grad) grad[i] = g_log_n;
        }
    }

    double total = 0.0;
    if (want_grad) std::fill(grad.begin() + num_intents_, grad.end(), 0.0);
    for (std::size_t b = 0; b < nblocks; ++b) {
        const double* acc = partial.data() + b * stride;
        total += acc[0];
        if (!want_grad) continue;
        grad[num_intents_ + J] += acc[1];
        for (std::size_t j = 0; j < J; ++j) grad[num_intents_ + j] += acc[2 + j];
    }
    return total;
}

double Objective::intent_loglik(std::size_t i, double log_n, std::span<const double> d,
                                double log_sigma2) const {
    double total = 0.0;
    const IntentTerms t = intent_terms(spec_, log_n, log_sigma2);
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
        total += cell_value(spec_, t, log_n, d[corpus_[k]], log_y_[k]);
    return total;
}

std::vector<double> pack(const Params& params) {
    std::vector<double> x;
    x.reserve(params.log_n.size() + params.d.size() + 1);
    x.insert(x.end(), params.log_n.begin(), params.log_n.end());
    x.insert(x.end(), params.d.begin(), params.d.end());
    x.push_back(params.log_sigma2);
    return x;
}

Params unpack(std::span<const double> x, std::size_t num_intents, std::size_t num_corpora) {
    if (x.size() != num_intents + num_corpora + 1)
        throw Error(Errc::DimensionMismatch, "parameter vector has wrong length");
    Params p;
    p.log_n.assign(x.begin(), x.begin() + num_intents);
    p.d.assign(x.begin() + num_intents, x.begin() + num_intents + num_corpora);
    p.log_sigma2 = x[num_intents + num_corpora];
    return p;
}

} // namespace langdiff
