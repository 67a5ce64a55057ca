#pragma once

#include "langdiff/data.hpp"
#include "langdiff/kernels.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace langdiff {

/// Total log-likelihood of a SurprisalTable as a function of the flat
/// parameter vector x = [log_n (I) | d (J) | log_sigma2].
///
/// `evaluate` is the OpenMP kernel: intents are cut into fixed blocks of
/// `kIntentBlock`, each block accumulates its partial sums privately, and the
/// block partials are combined in block order. The result is therefore
/// bit-identical for any thread count. `evaluate_serial` is the plain
/// cell-by-cell reference loop; it agrees with `evaluate` up to summation
/// order.
class Objective {
public:
    static constexpr std::size_t kIntentBlock = 64;

    Objective(const SurprisalTable& table, ModelSpec spec);

    std::size_t num_intents() const noexcept { return num_intents_; }
    std::size_t num_corpora() const noexcept { return num_corpora_; }
    std::size_t dimension() const noexcept { return num_intents_ + num_corpora_ + 1; }
    std::size_t num_cells() const noexcept { return corpus_.size(); }
    const ModelSpec& spec() const noexcept { return spec_; }

    /// Returns the log-likelihood; fills `grad` (size dimension()) when non-empty.
    double evaluate(std::span<const double> x, std::span<double> grad) const;
    double evaluate_serial(std::span<const double> x, std::span<double> grad) const;

    /// Log-likelihood of the cells of intent i alone, as a function of its log_n.
    double intent_loglik(std::size_t i, double log_n, std::span<const double> d,
                         double log_sigma2) const;

private:
    std::size_t num_intents_;
    std::size_t num_corpora_;
    ModelSpec spec_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> corpus_;
    std::vector<double> log_y_;
};

std::vector<double> pack(const Params& params);
Params unpack(std::span<const double> x, std::size_t num_intents, std::size_t num_corpora);

} // namespace langdiff
