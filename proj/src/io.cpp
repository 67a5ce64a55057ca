#include "langdiff/io.hpp"

#include "langdiff/error.hpp"
#include "text.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace langdiff {

namespace {

/// JSON has no NaN/inf; they become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

[[noreturn]] void schema_error(const std::string& what) {
    throw Error(Errc::MalformedRow, "JSON: " + what);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        schema_error(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T get_required(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) schema_error(std::string("missing field '") + key + "'");
    return get_or<T>(j, key, T{});
}

} // namespace

json to_json(const ModelSpec& spec) {
    json j;
    j["kind"] = to_string(spec.kind);
    if (spec.kind == ModelKind::M3) {
        j["huber_delta"] = spec.huber_delta;
        j["laplace_b"] = spec.laplace_b;
    }
    return j;
}

json to_json(const FitConfig& c) {
    json j;
    j["constraint"] = to_string(c.constraint);
    j["init"] = c.init == Init::Sensible ? "sensible" : "random";
    j["restarts"] = c.restarts;
    j["tol"] = c.tol;
    j["max_iter"] = c.max_iter;
    j["seed"] = c.seed;
    return j;
}

json to_json(const Params& p) {
    json j;
    j["log_n"] = json::array();
    for (double v : p.log_n) j["log_n"].push_back(number(v));
    j["d"] = json::array();
    for (double v : p.d) j["d"].push_back(number(v));
    j["log_sigma2"] = number(p.log_sigma2);
    return j;
}

json to_json(const FitResult& fit) {
    json j;
    j["model"] = to_json(fit.spec);
    j["config"] = to_json(fit.config);
    j["total_loglik"] = number(fit.total_loglik);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["grad_norm"] = number(fit.grad_norm);
    j["best_run"] = fit.best_run;
    j["num_cells"] = fit.num_cells;
    j["sigma2"] = number(fit.sigma2());
    j["log_sigma2"] = number(fit.params.log_sigma2);
    j["difficulties"] = json::object();
    for (std::size_t k = 0; k < fit.corpora.size(); ++k)
        j["difficulties"][fit.corpora[k]] = number(fit.params.d[k]);
    j["log_n"] = json::object();
    for (std::size_t k = 0; k < fit.intents.size(); ++k)
        j["log_n"][fit.intents[k]] = number(fit.params.log_n[k]);
    j["warnings"] = fit.warnings;
    return j;
}

FitResult fit_from_json(const json& j) {
    if (!j.is_object()) schema_error("fit result must be an object");
    FitResult fit;
    const json& model = j.contains("model") ? j.at("model") : json::object();
    fit.spec.kind = parse_model_kind(get_required<std::string>(model, "kind"));
    fit.spec.huber_delta = get_or<double>(model, "huber_delta", fit.spec.huber_delta);
    fit.spec.laplace_b = get_or<double>(model, "laplace_b", fit.spec.laplace_b);
    if (j.contains("config")) {
        const json& c = j.at("config");
        fit.config.constraint = parse_constraint(get_or<std::string>(c, "constraint", "sum-zero"));
        fit.config.init = get_or<std::string>(c, "init", "sensible") == "random" ? Init::Random : Init::Sensible;
        fit.config.restarts = get_or<unsigned>(c, "restarts", fit.config.restarts);
        fit.config.tol = get_or<double>(c, "tol", fit.config.tol);
        fit.config.max_iter = get_or<unsigned>(c, "max_iter", fit.config.max_iter);
        fit.config.seed = get_or<std::uint64_t>(c, "seed", fit.config.seed);
    }
    fit.total_loglik = get_or<double>(j, "total_loglik", 0.0);
    fit.converged = get_or<bool>(j, "converged", false);
    fit.iterations = get_or<std::size_t>(j, "iterations", 0);
    fit.grad_norm = get_or<double>(j, "grad_norm", 0.0);
    fit.best_run = get_or<unsigned>(j, "best_run", 0);
    fit.num_cells = get_or<std::size_t>(j, "num_cells", 0);
    fit.params.log_sigma2 = get_required<double>(j, "log_sigma2");

    const auto read_map = [&](const char* key, std::vector<std::string>& ids, std::vector<double>& vals) {
        if (!j.contains(key) || !j.at(key).is_object()) schema_error(std::string("missing object '") + key + "'");
        for (const auto& [id, v] : j.at(key).items()) {
            if (!v.is_number()) schema_error(std::string("non-numeric entry in '") + key + "'");
            ids.push_back(id);
            vals.push_back(v.get<double>());
        }
    };
    read_map("difficulties", fit.corpora, fit.params.d);
    if (j.contains("log_n")) read_map("log_n", fit.intents, fit.params.log_n);
    fit.warnings = get_or<std::vector<std::string>>(j, "warnings", {});
    return fit;
}

json to_json(const HeldoutResult& r) {
    json j;
    j["total_loglik"] = number(r.total_loglik);
    j["num_cells"] = r.num_cells;
    j["num_intents"] = r.intents.size();
    j["log_n"] = json::object();
    for (std::size_t k = 0; k < r.intents.size(); ++k) j["log_n"][r.intents[k]] = number(r.log_n[k]);
    return j;
}

json to_json(const SubsetSolution& s, const PresenceMatrix& m) {
    json j;
    j["chosen"] = json::array();
    for (std::size_t c : s.chosen_cols) j["chosen"].push_back(m.col_ids()[c]);
    j["num_chosen"] = s.chosen_cols.size();
    j["shared_documents"] = s.shared_rows.size();
    j["objective"] = s.objective;
    j["optimal"] = s.optimal;
    return j;
}

json to_json(const CorrelationReport& report) {
    json j;
    j["alpha"] = report.alpha;
    j["bh_family_size"] = report.family_size;
    j["bh_threshold"] = report.bh_threshold;
    j["rows"] = json::array();
    for (const auto& r : report.rows) {
        json row;
        row["feature"] = r.feature;
        row["source"] = r.source;
        row["kind"] = r.kind == FeatureKind::Scalar ? "scalar" : "categorical";
        row["n"] = r.n;
        if (r.kind == FeatureKind::Scalar) {
            row["pearson_r"] = number(r.pearson_r);
            row["pearson_p"] = number(r.pearson_p);
            row["pearson_significant"] = r.pearson_significant;
            row["spearman_rho"] = number(r.spearman_rho);
            row["spearman_p"] = number(r.spearman_p);
            row["spearman_significant"] = r.spearman_significant;
        } else {
            row["mood_statistic"] = number(r.mood_statistic);
            row["mood_df"] = r.mood_df;
            row["mood_p"] = number(r.mood_p);
        }
        j["rows"].push_back(std::move(row));
    }
    return j;
}

json to_json(const DispersionReport& report) {
    json j;
    j["groups"] = json::array();
    for (const auto& g : report.groups) {
        j["groups"].push_back({{"group", g.id},
                               {"count", g.count},
                               {"mean_d", number(g.mean_d)},
                               {"sample_sd", optional_number(g.sample_sd)}});
    }
    j["overall_sample_sd"] = optional_number(report.overall_sd);
    return j;
}

json to_json(const SynthConfig& c) {
    json j;
    j["intents"] = c.intents;
    j["corpora"] = c.corpora;
    if (!c.d_true.empty()) j["d_true"] = c.d_true;
    j["d_sd"] = c.d_sd;
    j["n_median"] = c.n_median;
    j["n_log_sd"] = c.n_log_sd;
    j["integer_n"] = c.integer_n;
    j["sigma2"] = c.sigma2;
    j["kind"] = to_string(c.kind);
    json missing;
    switch (c.missing.type) {
    case Missingness::Type::None: missing["type"] = "none"; break;
    case Missingness::Type::Mcar: missing["type"] = "mcar"; missing["rate"] = c.missing.rate; break;
    case Missingness::Type::Mar:
        missing["type"] = "mar";
        missing["rate"] = c.missing.rate;
        missing["bias"] = c.missing.bias;
        break;
    }
    j["missing"] = missing;
    if (c.outliers)
        j["outliers"] = {{"fraction", c.outliers->fraction},
                         {"log_multiplier", c.outliers->log_multiplier}};
    j["seed"] = c.seed;
    return j;
}

SynthConfig synth_config_from_json(const json& j) {
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
    static const char* known[] = {"intents", "corpora", "d_true", "d_sd", "n_median", "n_log_sd",
                                  "integer_n", "sigma2", "kind", "missing", "outliers", "seed"};
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
            throw Error(Errc::InvalidConfig, "unknown config key '" + key + "'");
    }
    try {
        SynthConfig c;
        c.intents = get_or<std::size_t>(j, "intents", c.intents);
        c.corpora = get_or<std::size_t>(j, "corpora", c.corpora);
        c.d_true = get_or<std::vector<double>>(j, "d_true", {});
        c.d_sd = get_or<double>(j, "d_sd", c.d_sd);
        c.n_median = get_or<double>(j, "n_median", c.n_median);
        c.n_log_sd = get_or<double>(j, "n_log_sd", c.n_log_sd);
        c.integer_n = get_or<bool>(j, "integer_n", c.integer_n);
        c.sigma2 = get_or<double>(j, "sigma2", c.sigma2);
        c.kind = parse_model_kind(get_or<std::string>(j, "kind", "m2"));
        if (j.contains("missing")) {
            const json& m = j.at("missing");
            const auto type = get_or<std::string>(m, "type", "none");
            if (type == "none")
                c.missing.type = Missingness::Type::None;
            else if (type == "mcar")
                c.missing.type = Missingness::Type::Mcar;
            else if (type == "mar")
                c.missing.type = Missingness::Type::Mar;
            else
                throw Error(Errc::InvalidConfig, "unknown missingness type '" + type + "'");
            c.missing.rate = get_or<double>(m, "rate", 0.0);
            c.missing.bias = get_or<double>(m, "bias", 0.0);
        }
        if (j.contains("outliers") && !j.at("outliers").is_null()) {
            const json& o = j.at("outliers");
            c.outliers = Outliers{get_or<double>(o, "fraction", 0.0), get_or<double>(o, "log_multiplier", 0.0)};
        }
        c.seed = get_or<std::uint64_t>(j, "seed", 0);
        c.validate();
        return c;
    } catch (const Error& e) {
        if (e.code() == Errc::InvalidConfig) throw;
        throw Error(Errc::InvalidConfig, e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedRow, path.string() + ": " + e.what());
    }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

FeatureTable read_feature_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::MalformedRow, "feature table: missing header (line 1)");
    strip_cr(line);
    const auto header = split_tabs(line);
    if (header.size() != 2 || header[0] != "corpus_id" || header[1].empty())
        throw Error(Errc::MalformedRow, "feature table header must be corpus_id<TAB><name>[:kind] (line 1)");

    FeatureTable t;
    t.name = header[1];
    if (const auto colon = t.name.rfind(':'); colon != std::string::npos) {
        const std::string kind = t.name.substr(colon + 1);
        if (kind == "scalar" || kind == "categorical") {
            t.kind = kind == "scalar" ? FeatureKind::Scalar : FeatureKind::Categorical;
            t.name.resize(colon);
        }
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        const std::string where = " (line " + std::to_string(lineno) + ")";
        if (f.size() != 2 || f[0].empty()) throw Error(Errc::MalformedRow, "expected corpus_id<TAB>value" + where);
        if (std::find(t.corpus_ids.begin(), t.corpus_ids.end(), f[0]) != t.corpus_ids.end())
            throw Error(Errc::MalformedRow, "duplicate corpus " + f[0] + where);
        t.corpus_ids.push_back(f[0]);
        if (t.kind == FeatureKind::Scalar) {
            const auto v = parse_double(f[1]);
            if (!v || !std::isfinite(*v)) throw Error(Errc::MalformedRow, "non-numeric value '" + f[1] + "'" + where);
            t.values.push_back(*v);
        } else {
            t.labels.push_back(f[1]);
        }
    }
    return t;
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return read_feature_table(in);
}

void write_difficulties_tsv(const FitResult& fit, std::ostream& out) {
    out << "corpus_id\td\n";
    for (std::size_t j = 0; j < fit.corpora.size(); ++j)
        out << fit.corpora[j] << '\t' << format_double(fit.params.d[j]) << '\n';
}

void write_correlation_tsv(const CorrelationReport& report, std::ostream& out) {
    out << "feature\tsource\tkind\tn\tstatistic\tvalue\tp\tbh_significant\n";
    const auto fmt = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); };
    for (const auto& r : report.rows) {
        const std::string head = r.feature + '\t' + r.source + '\t' +
                                 (r.kind == FeatureKind::Scalar ? "scalar" : "categorical") + '\t' +
                                 std::to_string(r.n) + '\t';
        if (r.kind == FeatureKind::Scalar) {
            out << head << "pearson\t" << fmt(r.pearson_r) << '\t' << fmt(r.pearson_p) << '\t'
                << (r.pearson_significant ? "true" : "false") << '\n';
            out << head << "spearman\t" << fmt(r.spearman_rho) << '\t' << fmt(r.spearman_p) << '\t'
                << (r.spearman_significant ? "true" : "false") << '\n';
        } else {
            out << head << "mood_chi2\t" << fmt(r.mood_statistic) << '\t' << fmt(r.mood_p) << "\tNA\n";
        }
    }
}

} // namespace langdiff
