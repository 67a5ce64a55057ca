#pragma once

#include "langdiff/data.hpp"
#include "langdiff/fit.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace langdiff {

struct CorrelationTest {
    double estimate; ///< r or rho
    double p;        ///< two-sided, from t = r sqrt((n-2)/(1-r^2)) with n-2 df
};

/// Pearson product-moment correlation. The t-test assumes bivariate normality.
/// Throws DegenerateInput for n < 3, unequal lengths or a constant argument.
CorrelationTest pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation (Pearson on average ranks) with the same t-test.
CorrelationTest spearman(std::span<const double> x, std::span<const double> y);

/// Spearman rho without validation or p-value; NaN when undefined.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, ties receiving the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

struct BhResult {
    std::vector<bool> flags;
    double threshold = 0.0; ///< k * alpha / m, or 0 when nothing is flagged
    std::size_t k = 0;      ///< number of rejections
};

/// Benjamini-Hochberg step-up procedure at FDR level alpha.
BhResult bh_correct(std::span<const double> p, double alpha);

struct MoodResult {
    double statistic = 0.0;
    double p = 1.0;
    std::size_t df = 0;
    double grand_median = 0.0;
    std::vector<std::size_t> above; ///< per group: values > grand median
    std::vector<std::size_t> below; ///< per group: values <= grand median
};

/// Mood's median test: Pearson chi-squared on the groups x {above, <=} table
/// (no continuity correction), df = groups - 1.
MoodResult moods_median_test(const std::vector<std::vector<double>>& groups);

struct GroupSummary {
    std::string id;
    double mean_d = 0.0;
    std::optional<double> sample_sd; ///< empty for groups of size 1
    std::size_t count = 0;
};

struct DispersionReport {
    std::vector<GroupSummary> groups;
    /// Sample sd over the concatenation of all group members.
    std::optional<double> overall_sd;
};

/// Member indices refer to fit.corpora. Throws UnknownCorpus on a bad index.
DispersionReport group_dispersion(const FitResult& fit, const std::vector<CorpusGroup>& groups);

std::optional<double> sample_sd(std::span<const double> x);

// ---------------------------------------------------------------------------
// Feature correlation suite

enum class FeatureKind { Scalar, Categorical };

struct FeatureTable {
    std::string name;
    FeatureKind kind = FeatureKind::Scalar;
    std::vector<std::string> corpus_ids;
    std::vector<double> values;      ///< scalar features
    std::vector<std::string> labels; ///< categorical features
};

/// A named difficulty vector, e.g. one model fit.
struct DifficultySource {
    std::string name;
    std::vector<std::string> corpus_ids;
    std::vector<double> d;
};

DifficultySource difficulty_source(const std::string& name, const FitResult& fit);

struct CorrelationRow {
    std::string feature;
    FeatureKind kind = FeatureKind::Scalar;
    std::string source;
    std::size_t n = 0;
    // scalar features
    double pearson_r = 0.0, pearson_p = 1.0;
    double spearman_rho = 0.0, spearman_p = 1.0;
    bool pearson_significant = false, spearman_significant = false;
    // categorical features
    double mood_statistic = 0.0, mood_p = 1.0;
    std::size_t mood_df = 0;
};

struct CorrelationReport {
    std::vector<CorrelationRow> rows;
    double alpha = 0.05;
    /// Number of scalar p-values (Pearson and Spearman of every scalar row)
    /// in the Benjamini-Hochberg family.
    std::size_t family_size = 0;
    double bh_threshold = 0.0;
};

/// One row per (feature, source), in feature-major order. Only corpora present
/// in both are used; fewer than 3 shared corpora throws InsufficientOverlap.
CorrelationReport correlate_all(const std::vector<DifficultySource>& sources,
                                const std::vector<FeatureTable>& features, double alpha);

} // namespace langdiff
