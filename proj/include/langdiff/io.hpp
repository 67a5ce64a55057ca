#pragma once

#include "langdiff/fit.hpp"
#include "langdiff/stats.hpp"
#include "langdiff/subset.hpp"
#include "langdiff/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace langdiff {

using json = nlohmann::ordered_json;

json to_json(const ModelSpec& spec);
json to_json(const FitConfig& config);
json to_json(const FitResult& fit);
json to_json(const HeldoutResult& result);
json to_json(const SubsetSolution& solution, const PresenceMatrix& m);
json to_json(const CorrelationReport& report);
json to_json(const DispersionReport& report);
json to_json(const Params& params);
json to_json(const SynthConfig& config);

/// Inverse of to_json(FitResult); throws MalformedRow on schema errors.
FitResult fit_from_json(const json& j);
/// Parses a simulation config; unknown keys are rejected.
SynthConfig synth_config_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const json& j, const std::filesystem::path& path);

/// Feature TSV: header `corpus_id<TAB><name>[:scalar|:categorical]`, then
/// `corpus_id<TAB>value` rows.
FeatureTable read_feature_table(std::istream& in);
FeatureTable load_feature_table(const std::filesystem::path& path);

void write_difficulties_tsv(const FitResult& fit, std::ostream& out);
void write_correlation_tsv(const CorrelationReport& report, std::ostream& out);

} // namespace langdiff
