#include "langdiff/stats.hpp"

#include "langdiff/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace langdiff {

namespace {

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Pearson r, or NaN if either argument is constant.
double pearson_r(std::span<const double> x, std::span<const double> y) {
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx, dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double t_test_p(double r, std::size_t n) {
    if (std::abs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t dist(df);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::DegenerateInput, "vectors differ in length");
    if (x.size() < 3) throw Error(Errc::DegenerateInput, "need at least 3 observations");
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!std::isfinite(x[k]) || !std::isfinite(y[k]))
            throw Error(Errc::DegenerateInput, "non-finite observation");
}

} // namespace

CorrelationTest pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double r = pearson_r(x, y);
    if (std::isnan(r)) throw Error(Errc::DegenerateInput, "zero variance");
    return {r, t_test_p(r, x.size())};
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo + 1;
        while (hi < order.size() && x[order[hi]] == x[order[lo]]) ++hi;
        const double avg = 0.5 * static_cast<double>(lo + 1 + hi); // mean of lo+1 .. hi
        for (std::size_t k = lo; k < hi; ++k) ranks[order[k]] = avg;
        lo = hi;
    }
    return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto rx = average_ranks(x), ry = average_ranks(y);
    return pearson_r(rx, ry);
}

CorrelationTest spearman(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double rho = spearman_rho(x, y);
    if (std::isnan(rho)) throw Error(Errc::DegenerateInput, "zero variance");
    return {rho, t_test_p(rho, x.size())};
}

BhResult bh_correct(std::span<const double> p, double alpha) {
    BhResult out;
    const std::size_t m = p.size();
    out.flags.assign(m, false);
    if (m == 0) return out;
    std::vector<double> sorted(p.begin(), p.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = m; k >= 1; --k) {
        if (sorted[k - 1] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
            out.k = k;
            break;
        }
    }
    if (out.k == 0) return out;
    out.threshold = static_cast<double>(out.k) * alpha / static_cast<double>(m);
    const double cutoff = sorted[out.k - 1];
    for (std::size_t i = 0; i < m; ++i) out.flags[i] = p[i] <= cutoff;
    return out;
}

MoodResult moods_median_test(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw Error(Errc::DegenerateInput, "need at least 2 groups");
    std::vector<double> all;
    for (const auto& g : groups) {
        if (g.empty()) throw Error(Errc::DegenerateInput, "empty group");
        for (double v : g) {
            if (!std::isfinite(v)) throw Error(Errc::DegenerateInput, "non-finite observation");
            all.push_back(v);
        }
    }
    std::sort(all.begin(), all.end());
    if (all.front() == all.back()) throw Error(Errc::DegenerateInput, "all observations equal");
    const std::size_t N = all.size();
    const double median = N % 2 ? all[N / 2] : 0.5 * (all[N / 2 - 1] + all[N / 2]);

    MoodResult out;
    out.grand_median = median;
    out.df = groups.size() - 1;
    std::size_t total_above = 0;
    for (const auto& g : groups) {
        const auto above = static_cast<std::size_t>(
            std::count_if(g.begin(), g.end(), [&](double v) { return v > median; }));
        out.above.push_back(above);
        out.below.push_back(g.size() - above);
        total_above += above;
    }
    if (total_above == 0)
        throw Error(Errc::DegenerateInput, "no observation lies above the grand median");

    const double n = static_cast<double>(N);
    const double frac_above = static_cast<double>(total_above) / n;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double size = static_cast<double>(groups[k].size());
        const double e_above = size * frac_above, e_below = size - e_above;
        const double o_above = static_cast<double>(out.above[k]);
        const double o_below = static_cast<double>(out.below[k]);
        out.statistic += (o_above - e_above) * (o_above - e_above) / e_above +
                         (o_below - e_below) * (o_below - e_below) / e_below;
    }
    const boost::math::chi_squared dist(static_cast<double>(out.df));
    out.p = std::clamp(boost::math::cdf(boost::math::complement(dist, out.statistic)), 0.0, 1.0);
    return out;
}

std::optional<double> sample_sd(std::span<const double> x) {
    if (x.size() < 2) return std::nullopt;
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

DispersionReport group_dispersion(const FitResult& fit, const std::vector<CorpusGroup>& groups) {
    DispersionReport out;
    std::vector<double> all;
    for (const auto& g : groups) {
        std::vector<double> values;
        for (std::size_t j : g.members) {
            if (j >= fit.params.d.size())
                throw Error(Errc::UnknownCorpus, "group " + g.id + " references corpus " +
                                                     std::to_string(j) + " outside the fit");
            values.push_back(fit.params.d[j]);
        }
        GroupSummary s;
        s.id = g.id;
        s.count = values.size();
        s.mean_d = values.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(values);
        s.sample_sd = sample_sd(values);
        out.groups.push_back(std::move(s));
        all.insert(all.end(), values.begin(), values.end());
    }
    out.overall_sd = sample_sd(all);
    return out;
}

DifficultySource difficulty_source(const std::string& name, const FitResult& fit) {
    return {name, fit.corpora, fit.params.d};
}

CorrelationReport correlate_all(const std::vector<DifficultySource>& sources,
                                const std::vector<FeatureTable>& features, double alpha) {
    CorrelationReport report;
    report.alpha = alpha;
    for (const auto& feature : features) {
        for (const auto& source : sources) {
            std::vector<double> fx, dy;
            std::vector<std::string> labels;
            for (std::size_t k = 0; k < feature.corpus_ids.size(); ++k) {
                const auto it = std::find(source.corpus_ids.begin(), source.corpus_ids.end(),
                                          feature.corpus_ids[k]);
                if (it == source.corpus_ids.end()) continue;
                dy.push_back(source.d[static_cast<std::size_t>(it - source.corpus_ids.begin())]);
                if (feature.kind == FeatureKind::Scalar)
                    fx.push_back(feature.values[k]);
                else
                    labels.push_back(feature.labels[k]);
            }
            if (dy.size() < 3)
                throw Error(Errc::InsufficientOverlap, "feature " + feature.name + " and " +
                                                           source.name + " share " +
                                                           std::to_string(dy.size()) + " corpora");
            CorrelationRow row;
            row.feature = feature.name;
            row.kind = feature.kind;
            row.source = source.name;
            row.n = dy.size();
            if (feature.kind == FeatureKind::Scalar) {
                const auto pr = pearson(fx, dy);
                const auto sp = spearman(fx, dy);
                row.pearson_r = pr.estimate;
                row.pearson_p = pr.p;
                row.spearman_rho = sp.estimate;
                row.spearman_p = sp.p;
            } else {
                std::vector<std::string> categories;
                std::vector<std::vector<double>> groups;
                for (std::size_t k = 0; k < labels.size(); ++k) {
                    const auto it = std::find(categories.begin(), categories.end(), labels[k]);
                    if (it == categories.end()) {
                        categories.push_back(labels[k]);
                        groups.push_back({dy[k]});
                    } else {
                        groups[static_cast<std::size_t>(it - categories.begin())].push_back(dy[k]);
                    }
                }
                const auto mood = moods_median_test(groups);
                row.mood_statistic = mood.statistic;
                row.mood_p = mood.p;
                row.mood_df = mood.df;
            }
            report.rows.push_back(std::move(row));
        }
    }

    std::vector<double> family;
    for (const auto& row : report.rows) {
        if (row.kind != FeatureKind::Scalar) continue;
        family.push_back(row.pearson_p);
        family.push_back(row.spearman_p);
    }
    const BhResult bh = bh_correct(family, alpha);
    report.family_size = family.size();
    report.bh_threshold = bh.threshold;
    std::size_t k = 0;
    for (auto& row : report.rows) {
        if (row.kind != FeatureKind::Scalar) continue;
        row.pearson_significant = bh.flags[k++];
        row.spearman_significant = bh.flags[k++];
    }
    return report;
}

} // namespace langdiff
