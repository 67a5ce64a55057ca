#include "langdiff/fit.hpp"

#include "langdiff/error.hpp"
#include "langdiff/objective.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace langdiff {

std::string_view to_string(Constraint c) noexcept {
    switch (c) {
    case Constraint::SumZero: return "sum-zero";
    case Constraint::SumJ: return "sum-J";
    case Constraint::None: return "none";
    }
    return "?";
}

Constraint parse_constraint(std::string_view name) {
    if (name == "sum-zero" || name == "sum_zero") return Constraint::SumZero;
    if (name == "sum-J" || name == "sum_J" || name == "sum-j" || name == "sum_j")
        return Constraint::SumJ;
    if (name == "none") return Constraint::None;
    throw Error(Errc::InvalidConfig, "unknown constraint '" + std::string(name) + "'");
}

void FitConfig::validate() const {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw Error(Errc::InvalidConfig, "tol must be > 0");
    if (max_iter == 0) throw Error(Errc::InvalidConfig, "max_iter must be positive");
}

std::vector<std::pair<std::string, double>> FitResult::difficulties() const {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(corpora.size());
    for (std::size_t j = 0; j < corpora.size(); ++j) out.emplace_back(corpora[j], params.d[j]);
    return out;
}

double constraint_target(Constraint c, std::size_t num_corpora) noexcept {
    return c == Constraint::SumJ ? static_cast<double>(num_corpora) : 0.0;
}

Params sensible_init(const SurprisalTable& table, Constraint constraint) {
    const std::size_t J = table.num_corpora();
    Params p;
    const double d0 = constraint_target(constraint, J) / static_cast<double>(J);
    p.d.assign(J, d0);
    p.log_n.resize(table.num_intents());
    for (std::size_t i = 0; i < table.num_intents(); ++i) {
        double s = 0.0;
        const auto cells = table.cells_of_intent(i);
        for (const Cell& c : cells) s += std::log(c.surprisal);
        p.log_n[i] = s / static_cast<double>(cells.size()) - d0;
    }
    double ss = 0.0;
    for (const Cell& c : table.cells()) {
        const double r = std::log(c.surprisal) - p.log_n[c.intent] - p.d[c.corpus];
        ss += r * r;
    }
    const double var = table.num_cells() > 1 ? ss / static_cast<double>(table.num_cells() - 1) : 1.0;
    p.log_sigma2 = std::log(std::max(var, kSigma2Floor));
    return p;
}

namespace {

Params random_init(const SurprisalTable& table, Constraint constraint, std::uint64_t seed) {
    Params p = sensible_init(table, constraint);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : p.log_n) v += 0.5 * normal(rng);
    double mean = 0.0;
    std::vector<double> jitter(p.d.size());
    for (double& v : jitter) {
        v = 0.1 * normal(rng);
        mean += v / static_cast<double>(jitter.size());
    }
    for (std::size_t j = 0; j < p.d.size(); ++j)
        p.d[j] += constraint == Constraint::None ? jitter[j] : jitter[j] - mean;
    p.log_sigma2 += normal(rng);
    return p;
}

/// Inverse of a diagonal Gauss-Newton curvature estimate at `p`, on the
/// per-cell-mean scale. Each cell contributes 1/s (its residual precision) to
/// its intent and corpus; the d block gets one shared value so the constraint
/// projection commutes with it.
std::vector<double> inverse_curvature(const SurprisalTable& table, const ModelSpec& spec, const Params& p) {
    const std::size_t I = table.num_intents(), J = table.num_corpora();
    const double N = static_cast<double>(table.num_cells());
    const double sigma2 = p.sigma2();
    std::vector<double> h(I + J + 1, 0.0);
    double d_total = 0.0;
    for (const Cell& c : table.cells()) {
        const double s = spec.kind == ModelKind::M1 ? sigma2
                                                     : fenton_wilkinson(sigma2, std::exp(p.log_n[c.intent])).sigma_i2;
        const double w = 1.0 / std::max(s, kSigma2Floor);
        h[c.intent] += w;
        d_total += w;
    }
    for (std::size_t i = 0; i < I; ++i) h[i] = N / h[i];
    for (std::size_t j = 0; j < J; ++j) h[I + j] = N * static_cast<double>(J) / d_total;
    h[I + J] = 2.0;
    return h;
}

std::uint64_t run_seed(std::uint64_t seed, unsigned run) {
    return seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(run) + 1));
}

} // namespace

namespace {

/// Maximises one held-out intent's log-likelihood over log n.
double refit_intent(const Objective& objective, std::size_t i, const SurprisalTable& table,
                    std::span<const double> d, double log_sigma2, double& log_n_out) {
    const auto cells = table.cells_of_intent(i);
    double centre = 0.0;
    for (const Cell& c : cells) centre += std::log(c.surprisal) - d[c.corpus];
    centre /= static_cast<double>(cells.size());

    const auto value = [&](double log_n) { return objective.intent_loglik(i, log_n, d, log_sigma2); };
    if (objective.spec().kind == ModelKind::M1) {
        log_n_out = centre;
        return value(centre);
    }

    constexpr double kHalfWidth = 10.0;
    std::uintmax_t max_iter = 200;
    const auto [arg, neg] = boost::math::tools::brent_find_minima(
        [&](double t) { return -value(t); }, centre - kHalfWidth, centre + kHalfWidth,
        std::numeric_limits<double>::digits, max_iter);
    double x = arg, fx = -neg;

    // Brent locates the optimum to ~sqrt(eps); polish with safeguarded Newton
    // steps on the analytic derivative.
    const ModelSpec& spec = objective.spec();
    const auto slope = [&](double log_n) {
        double s = 0.0;
        for (const Cell& c : cells)
            s += evaluate_cell(spec, log_n, d[c.corpus], log_sigma2, c.surprisal).d_log_n;
        return s;
    };
    for (int step = 0; step < 4; ++step) {
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        const double g = slope(x);
        const double curv = (slope(x + h) - slope(x - h)) / (2.0 * h);
        if (!(curv < 0.0) || !std::isfinite(g)) break;
        const double candidate = x - g / curv;
        const double fc = value(candidate);
        if (!(fc > fx)) break;
        x = candidate;
        fx = fc;
    }
    if (spec.kind == ModelKind::M2L) {
        // Laplace optima sit on a kink z_ij = 0, which Brent only brackets to
        // ~sqrt(eps). Solve each cell's kink equation exactly and keep the best.
        for (const Cell& c : cells) {
            const double target = std::log(c.surprisal) - d[c.corpus];
            double t = x;
            for (int it = 0; it < 8; ++it) {
                const IntentTerms terms = intent_terms(spec, t, log_sigma2);
                const double h = target - t - terms.mu;
                t -= h / terms.z_log_n;
                if (std::abs(h) <= 1e-15 * std::max(1.0, std::abs(t))) break;
            }
            const double ft = value(t);
            if (ft > fx) {
                x = t;
                fx = ft;
            }
        }
    }
    log_n_out = x;
    return fx;
}

/// The Laplace objective has kinks in every log n_i at its optimum, where
/// quasi-Newton steps stall. Alternate short L-BFGS bursts with exact
/// per-intent 1-D refits of log n until a whole cycle stops improving.
LbfgsResult minimize_alternating(const GradientFunction& f, const Objective& objective,
                                 const SurprisalTable& table, std::vector<double>& x,
                                 const LbfgsOptions& options, const Projection* proj) {
    constexpr std::size_t kBurst = 50;
    const std::size_t I = table.num_intents(), J = table.num_corpora();
    LbfgsOptions burst = options;
    LbfgsResult total;
    std::vector<double> g(x.size());
    double f_prev = std::numeric_limits<double>::infinity();
    while (true) {
        burst.max_iter = std::min(kBurst, options.max_iter - total.iterations);
        LbfgsResult r = minimize_lbfgs(f, x, burst, proj);
        total.iterations += r.iterations;
        total.evaluations += r.evaluations;
        total.history.insert(total.history.end(), r.history.begin() + (total.history.empty() ? 0 : 1),
                             r.history.end());
        total.status = r.status;
        total.value = r.value;
        total.grad_norm = r.grad_norm;
        if (r.status == LbfgsStatus::GradientTolerance || r.status == LbfgsStatus::NonFiniteStart) break;

        const std::span<const double> d(x.data() + I, J);
        const double log_sigma2 = x[I + J];
#pragma omp parallel for schedule(dynamic, 16)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(I); ++i) {
            const double current = objective.intent_loglik(i, x[i], d, log_sigma2);
            double candidate = x[i];
            if (refit_intent(objective, i, table, d, log_sigma2, candidate) > current) x[i] = candidate;
        }
        const double fx = f(x, g);
        ++total.evaluations;
        if (proj && proj->tangent) proj->tangent(g);
        total.value = fx;
        total.grad_norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
        if (options.record_history) total.history.push_back(fx);
        if (f_prev - fx <= options.f_rel_tol * std::max(1.0, std::abs(fx))) {
            total.status = LbfgsStatus::FunctionTolerance;
            break;
        }
        f_prev = fx;
        if (total.iterations >= options.max_iter) {
            total.status = LbfgsStatus::MaxIterations;
            break;
        }
    }
    return total;
}

} // namespace

FitResult fit_map(const SurprisalTable& table, const ModelSpec& spec, const FitConfig& config) {
    if (table.empty()) throw Error(Errc::EmptyTable, "no cells to fit");
    spec.validate();
    config.validate();

    const std::size_t I = table.num_intents(), J = table.num_corpora();
    const Objective objective(table, spec);
    const double scale = 1.0 / static_cast<double>(table.num_cells());
    const GradientFunction f = [&](std::span<const double> x, std::span<double> g) {
        const double ll = objective.evaluate(x, g);
        for (double& v : g) v *= -scale;
        return -ll * scale;
    };

    const double target = constraint_target(config.constraint, J);
    Projection projection{
        [&](std::span<double> v) {
            auto d = v.subspan(I, J);
            const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(J);
            for (double& x : d) x -= mean;
        },
        [&](std::span<double> v) {
            auto d = v.subspan(I, J);
            const double shift =
                (std::accumulate(d.begin(), d.end(), 0.0) - target) / static_cast<double>(J);
            for (double& x : d) x -= shift;
        }};
    const Projection* proj = config.constraint == Constraint::None ? nullptr : &projection;

    LbfgsOptions options;
    options.max_iter = config.max_iter;
    options.grad_tol = config.tol;
    options.record_history = config.record_history;

    FitResult best;
    bool have_best = false;
    for (unsigned run = 0; run <= config.restarts; ++run) {
        const bool random = run > 0 || config.init == Init::Random;
        const Params start = random ? random_init(table, config.constraint, run_seed(config.seed, run))
                                    : sensible_init(table, config.constraint);
        std::vector<double> x = pack(start);
        if (proj) proj->retract(x);
        options.h0_diag = inverse_curvature(table, spec, start);
        const LbfgsResult r = spec.kind == ModelKind::M2L
                                  ? minimize_alternating(f, objective, table, x, options, proj)
                                  : minimize_lbfgs(f, x, options, proj);
        const double total = objective.evaluate(x, {});
        if (!std::isfinite(total)) continue;
        if (have_best && !(total > best.total_loglik)) continue;

        have_best = true;
        best.params = unpack(x, I, J);
        best.total_loglik = total;
        best.converged = r.converged();
        best.iterations = r.iterations;
        best.grad_norm = r.grad_norm;
        best.best_run = run;
        best.history.clear();
        for (double v : r.history) best.history.push_back(-v / scale);
    }
    if (!have_best) throw Error(Errc::DomainError, "objective is not finite at any start point");

    best.intents = table.intents();
    best.corpora = table.corpora();
    best.spec = spec;
    best.config = config;
    best.num_cells = table.num_cells();
    if (config.constraint == Constraint::None && spec.kind == ModelKind::M1)
        best.warnings.push_back(
            "model m1 without a difficulty constraint: d is identified only up to a common shift");
    if (!best.converged)
        best.warnings.push_back("optimizer stopped before reaching the gradient tolerance");
    return best;
}

HeldoutResult heldout_eval(const FitResult& train_fit, const ModelSpec& spec,
                           const SurprisalTable& heldout, const FitConfig& config) {
    spec.validate();
    config.validate();
    // Difficulties re-indexed into the held-out table's corpus order.
    std::vector<double> d(heldout.num_corpora());
    for (std::size_t j = 0; j < heldout.num_corpora(); ++j) {
        const auto& id = heldout.corpora()[j];
        const auto it = std::find(train_fit.corpora.begin(), train_fit.corpora.end(), id);
        if (it == train_fit.corpora.end())
            throw Error(Errc::UnknownCorpus, "corpus " + id + " was not in the training fit");
        d[j] = train_fit.params.d[static_cast<std::size_t>(it - train_fit.corpora.begin())];
    }

    const Objective objective(heldout, spec);
    const double log_sigma2 = train_fit.params.log_sigma2;
    HeldoutResult out;
    out.intents = heldout.intents();
    out.log_n.assign(heldout.num_intents(), 0.0);
    out.num_cells = heldout.num_cells();
    std::vector<double> per_intent(heldout.num_intents(), 0.0);

#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(heldout.num_intents()); ++i)
        per_intent[i] = refit_intent(objective, i, heldout, d, log_sigma2, out.log_n[i]);

    for (double v : per_intent) out.total_loglik += v;
    return out;
}

std::vector<double> gauge_align(std::span<const double> d_est, std::span<const double> d_ref) {
    if (d_est.size() != d_ref.size())
        throw Error(Errc::LengthMismatch, "difficulty vectors differ in length");
    if (d_est.empty()) return {};
    double shift = 0.0;
    for (std::size_t j = 0; j < d_est.size(); ++j) shift += d_ref[j] - d_est[j];
    shift /= static_cast<double>(d_est.size());
    std::vector<double> out(d_est.begin(), d_est.end());
    for (double& v : out) v += shift;
    return out;
}

} // namespace langdiff
