#include "helpers.hpp"

#include "langdiff/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace langdiff;
using testing::error_code;

namespace {

SynthConfig base(std::uint64_t seed) {
    SynthConfig c;
    c.intents = 1000;
    c.corpora = 8;
    c.seed = seed;
    return c;
}

/// Per-corpus count of observed cells.
std::vector<std::size_t> observed_per_corpus(const SurprisalTable& t) {
    std::vector<std::size_t> out(t.num_corpora(), 0);
    for (const Cell& c : t.cells()) ++out[c.corpus];
    return out;
}

} // namespace

TEST_CASE("generation is seeded") {
    const auto a = generate_table(base(1));
    const auto b = generate_table(base(1));
    const auto c = generate_table(base(2));
    CHECK(a.table == b.table);
    CHECK(a.truth.d == b.truth.d);
    CHECK_FALSE(a.table == c.table);
}

TEST_CASE("noiseless tables are exactly n e^d") {
    for (ModelKind k : {ModelKind::M1, ModelKind::M2, ModelKind::M2L}) {
        SynthConfig cfg = base(3);
        cfg.sigma2 = 0.0;
        cfg.kind = k;
        const auto s = generate_table(cfg);
        for (const Cell& c : s.table.cells()) {
            const double expected = std::exp(s.truth.log_n[c.intent] + s.truth.d[c.corpus]);
            CHECK(c.surprisal == doctest::Approx(expected).epsilon(1e-13));
        }
    }
}

TEST_CASE("drawn difficulties are centred; explicit ones are kept") {
    const auto s = generate_table(base(4));
    CHECK(std::abs(std::accumulate(s.truth.d.begin(), s.truth.d.end(), 0.0)) < 1e-12);

    SynthConfig cfg = base(4);
    cfg.corpora = 3;
    cfg.d_true = {-0.05, 0.0, 0.05};
    const auto e = generate_table(cfg);
    for (std::size_t j = 0; j < 3; ++j) {
        const std::string& id = e.table.corpora()[j];
        const std::size_t original = static_cast<std::size_t>(std::stoi(id.substr(1)));
        CHECK(e.truth.d[j] == cfg.d_true[original]);
    }
    CHECK(e.truth.log_sigma2 == doctest::Approx(std::log(cfg.sigma2)));
}

TEST_CASE("MCAR masking") {
    SynthConfig cfg = base(5);
    cfg.missing = {Missingness::Type::Mcar, 0.3, 0.0};
    const auto s = generate_table(cfg);
    const double cells = 1000.0 * 8.0;
    const double sd = std::sqrt(cells * 0.3 * 0.7);
    CHECK(std::abs(static_cast<double>(s.table.num_cells()) - 0.7 * cells) <= 3.0 * sd);
    const double tol = 3.0 * std::sqrt(0.3 * 0.7 / 1000.0);
    for (std::size_t n : observed_per_corpus(s.table)) CHECK(std::abs(1.0 - n / 1000.0 - 0.3) <= tol);
}

TEST_CASE("every intent keeps two cells under heavy masking") {
    SynthConfig cfg = base(6);
    cfg.corpora = 3;
    cfg.missing = {Missingness::Type::Mcar, 0.8, 0.0};
    const auto s = generate_table(cfg);
    CHECK(s.table.num_intents() == 1000);
    for (std::size_t i = 0; i < s.table.num_intents(); ++i) CHECK(s.table.cells_of_intent(i).size() >= 2);
}

TEST_CASE("MAR masking removes large intents from even corpora and small ones from odd") {
    SynthConfig cfg = base(7);
    // Rows keep at least two cells, so J = 2 would leave nothing to mask.
    cfg.corpora = 4;
    cfg.intents = 4000;
    cfg.missing = {Missingness::Type::Mar, 0.3, 2.0};
    const auto s = generate_table(cfg);
    double sum[4] = {0, 0, 0, 0};
    double count[4] = {0, 0, 0, 0};
    for (const Cell& c : s.table.cells()) {
        sum[c.corpus] += s.truth.log_n[c.intent];
        count[c.corpus] += 1;
    }
    // Observed cells of "c0" are biased towards small intents.
    const auto j0 = *s.table.find_corpus("c0"), j1 = *s.table.find_corpus("c1");
    CHECK(sum[j0] / count[j0] < sum[j1] / count[j1] - 0.2);
}

TEST_CASE("exact-sum M2 generation has the Fenton-Wilkinson moments") {
    SynthConfig cfg;
    cfg.intents = 100'000;
    cfg.corpora = 10;
    cfg.n_median = 10.0;
    cfg.n_log_sd = 0.0;
    cfg.integer_n = true;
    cfg.sigma2 = 0.25;
    cfg.seed = 8;
    const auto s = generate_table(cfg);
    REQUIRE(s.table.num_cells() == 1'000'000);
    double m = 0.0, m2 = 0.0;
    for (const Cell& c : s.table.cells()) {
        CHECK(s.truth.log_n[c.intent] == std::log(10.0));
        const double r = c.surprisal / (10.0 * std::exp(s.truth.d[c.corpus]));
        m += r;
        m2 += r * r;
    }
    m /= 1e6;
    const double var = m2 / 1e6 - m * m;
    const auto fw = fenton_wilkinson(0.25, 10.0);
    const double fw_mean = std::exp(fw.mu + 0.5 * fw.sigma_i2);
    const double fw_var = std::expm1(fw.sigma_i2) * std::exp(2 * fw.mu + fw.sigma_i2);
    CHECK(std::abs(m / fw_mean - 1.0) < 0.01);
    CHECK(std::abs(var / fw_var - 1.0) < 0.01);
}

TEST_CASE("M2L log residuals have the matched mean and variance") {
    SynthConfig cfg;
    cfg.intents = 50'000;
    cfg.corpora = 4;
    cfg.n_median = 3.0;
    cfg.n_log_sd = 0.0;
    cfg.sigma2 = 0.3;
    cfg.kind = ModelKind::M2L;
    cfg.seed = 9;
    const auto s = generate_table(cfg);
    const auto fw = fenton_wilkinson(0.3, 3.0);
    double m = 0, m2 = 0, abs_dev = 0;
    const double N = static_cast<double>(s.table.num_cells());
    for (const Cell& c : s.table.cells()) {
        const double e = std::log(c.surprisal) - s.truth.log_n[c.intent] - s.truth.d[c.corpus];
        m += e;
        m2 += e * e;
        abs_dev += std::abs(e - fw.mu);
    }
    m /= N;
    const double var = m2 / N - m * m;
    CHECK(m == doctest::Approx(fw.mu).epsilon(0.02));
    CHECK(var == doctest::Approx(fw.sigma_i2).epsilon(0.02));
    // E|e - mu| = b for a Laplace residual.
    CHECK(abs_dev / N == doctest::Approx(std::sqrt(fw.sigma_i2 / 2)).epsilon(0.02));
}

TEST_CASE("outliers") {
    SynthConfig clean = base(10);
    SynthConfig dirty = base(10);
    dirty.outliers = Outliers{0.05, 2.0};
    const auto a = generate_table(clean);
    const auto b = generate_table(dirty);
    std::size_t big = 0;
    for (const Cell& c : b.table.cells()) {
        const double e = std::log(c.surprisal) - b.truth.log_n[c.intent] - b.truth.d[c.corpus];
        big += std::abs(e) > 1.0;
    }
    const double frac = static_cast<double>(big) / b.table.num_cells();
    CHECK(frac == doctest::Approx(0.05).epsilon(0.25));
    CHECK(a.truth.log_n == b.truth.log_n);
}

TEST_CASE("configuration errors") {
    SynthConfig c = base(0);
    c.kind = ModelKind::M3;
    CHECK(error_code([&] { generate_table(c); }) == Errc::InvalidConfig);
    c = base(0);
    c.missing = {Missingness::Type::Mcar, 1.0, 0.0};
    CHECK(error_code([&] { generate_table(c); }) == Errc::InvalidConfig);
    c = base(0);
    c.corpora = 1;
    CHECK(error_code([&] { generate_table(c); }) == Errc::InvalidConfig);
    c = base(0);
    c.d_true = {0.1, 0.2};
    CHECK(error_code([&] { generate_table(c); }) == Errc::InvalidConfig);
}

TEST_CASE("recovery report") {
    const auto s = generate_table(base(11));
    FitResult fit;
    fit.params = s.truth;
    auto r = recovery_report(s.truth, fit);
    CHECK(r.max_abs_d_err == 0.0);
    CHECK(r.rmse_d == 0.0);
    CHECK(r.rank_corr_d == doctest::Approx(1.0));
    CHECK(r.rel_err_sigma2 == doctest::Approx(0.0).scale(1e-12));

    for (double& d : fit.params.d) d += 0.3;
    r = recovery_report(s.truth, fit);
    CHECK(r.max_abs_d_err < 1e-12);

    fit.params.d.pop_back();
    CHECK(error_code([&] { recovery_report(s.truth, fit); }) == Errc::DimensionMismatch);
}
