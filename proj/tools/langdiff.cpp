// langdiff: language difficulty estimation from parallel surprisal tables.

#include "langdiff/data.hpp"
#include "langdiff/error.hpp"
#include "langdiff/fit.hpp"
#include "langdiff/io.hpp"
#include "langdiff/manifest.hpp"
#include "langdiff/stats.hpp"
#include "langdiff/subset.hpp"
#include "langdiff/synth.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace langdiff;

namespace {

enum Exit { kOk = 0, kInputError = 1, kNotConverged = 2, kInfeasible = 3 };

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    out << text;
}

/// TSV outputs get their manifest as a `<path>.manifest.json` sidecar.
void write_with_sidecar(const fs::path& path, const std::string& text, const RunManifest& manifest) {
    write_text(path, text);
    write_json_file(manifest.to_json(), fs::path(path.string() + ".manifest.json"));
}

fs::path replace_extension(fs::path p, const char* ext) { return p.replace_extension(ext); }

struct FitArgs {
    std::string input, out, out_tsv;
    std::string model = "m2", constraint = "sum-zero", init = "sensible";
    double tol = 1e-6, huber_delta = 0.1, laplace_b = 1.0;
    unsigned max_iter = 2000, restarts = 1;
    std::uint64_t seed = 0;
};

int cmd_fit(const FitArgs& a) {
    RunManifest manifest;
    manifest.command = "fit";
    manifest.add_input(a.input);
    const SurprisalTable table = load_surprisal_table(a.input);

    ModelSpec spec;
    spec.kind = parse_model_kind(a.model);
    spec.huber_delta = a.huber_delta;
    spec.laplace_b = a.laplace_b;
    FitConfig config;
    config.constraint = parse_constraint(a.constraint);
    if (a.init != "sensible" && a.init != "random")
        throw Error(Errc::InvalidConfig, "--init must be sensible or random");
    config.init = a.init == "random" ? Init::Random : Init::Sensible;
    config.tol = a.tol;
    config.max_iter = a.max_iter;
    config.restarts = a.restarts;
    config.seed = a.seed;

    const FitResult fit = fit_map(table, spec, config);
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';

    manifest.seed = a.seed;
    manifest.config = {{"model", to_json(spec)}, {"fit", to_json(config)}};
    json out = to_json(fit);
    out["manifest"] = manifest.to_json();
    write_json_file(out, a.out);

    std::ostringstream tsv;
    write_difficulties_tsv(fit, tsv);
    const fs::path tsv_path = a.out_tsv.empty() ? replace_extension(a.out, ".tsv") : fs::path(a.out_tsv);
    write_with_sidecar(tsv_path, tsv.str(), manifest);
    return fit.converged ? kOk : kNotConverged;
}

int cmd_eval(const std::string& fit_path, const std::string& heldout_path, const std::string& out_path) {
    RunManifest manifest;
    manifest.command = "eval";
    manifest.add_input(fit_path);
    manifest.add_input(heldout_path);
    const FitResult fit = fit_from_json(read_json_file(fit_path));
    const SurprisalTable heldout = load_surprisal_table(heldout_path);
    const HeldoutResult r = heldout_eval(fit, fit.spec, heldout, fit.config);
    manifest.config = {{"model", to_json(fit.spec)}};
    json out = to_json(r);
    out["model"] = to_json(fit.spec);
    out["manifest"] = manifest.to_json();
    write_json_file(out, out_path);
    return kOk;
}

int cmd_simulate(const std::string& config_path, const std::string& table_path, const std::string& truth_path) {
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.add_input(config_path);
    const SynthConfig config = synth_config_from_json(read_json_file(config_path));
    manifest.seed = config.seed;
    manifest.config = to_json(config);
    const SynthTable s = generate_table(config);

    std::ostringstream tsv;
    write_surprisal_table(s.table, tsv);
    write_with_sidecar(table_path, tsv.str(), manifest);

    json truth;
    truth["sigma2"] = config.sigma2;
    truth["difficulties"] = json::object();
    for (std::size_t j = 0; j < s.table.num_corpora(); ++j) truth["difficulties"][s.table.corpora()[j]] = s.truth.d[j];
    truth["log_n"] = json::object();
    for (std::size_t i = 0; i < s.table.num_intents(); ++i) truth["log_n"][s.table.intents()[i]] = s.truth.log_n[i];
    truth["num_cells"] = s.table.num_cells();
    truth["manifest"] = manifest.to_json();
    write_json_file(truth, truth_path);
    return kOk;
}

int cmd_select(const std::string& presence_path, std::size_t min_rows, const std::string& mode,
               const std::string& strategy, std::size_t cap, const std::string& out_path) {
    RunManifest manifest;
    manifest.command = "select";
    manifest.add_input(presence_path);
    manifest.config = {{"min_rows", min_rows}, {"mode", mode}};
    const PresenceMatrix m = load_presence_matrix(presence_path);
    SubsetSolution s;
    if (mode == "exact") {
        manifest.config["max_exact_cols"] = cap;
        s = select_exact(m, min_rows, cap);
    } else {
        manifest.config["strategy"] = strategy;
        s = select_greedy(m, min_rows,
                          strategy == "add-best" ? GreedyStrategy::AddBestCol : GreedyStrategy::DropWorstCol);
    }
    json out = to_json(s, m);
    out["manifest"] = manifest.to_json();
    write_json_file(out, out_path);
    return kOk;
}

int cmd_correlate(const std::vector<std::string>& fits, const std::vector<std::string>& features, double alpha,
                  const std::string& out_path, const std::string& scatter_path) {
    RunManifest manifest;
    manifest.command = "correlate";
    manifest.config = {{"alpha", alpha}};
    std::vector<DifficultySource> sources;
    for (const auto& f : fits) {
        manifest.add_input(f);
        sources.push_back(difficulty_source(fs::path(f).stem().string(), fit_from_json(read_json_file(f))));
    }
    std::vector<FeatureTable> tables;
    for (const auto& f : features) {
        manifest.add_input(f);
        tables.push_back(load_feature_table(f));
    }
    const CorrelationReport report = correlate_all(sources, tables, alpha);

    if (fs::path(out_path).extension() == ".json") {
        json out = to_json(report);
        out["manifest"] = manifest.to_json();
        write_json_file(out, out_path);
    } else {
        std::ostringstream tsv;
        write_correlation_tsv(report, tsv);
        write_with_sidecar(out_path, tsv.str(), manifest);
    }

    if (!scatter_path.empty()) {
        // Plot-ready pairs: one line per (feature, source, corpus).
        std::ostringstream tsv;
        tsv << "feature\tsource\tcorpus_id\tfeature_value\td\n";
        for (const auto& t : tables) {
            for (const auto& s : sources) {
                for (std::size_t k = 0; k < t.corpus_ids.size(); ++k) {
                    const auto it = std::find(s.corpus_ids.begin(), s.corpus_ids.end(), t.corpus_ids[k]);
                    if (it == s.corpus_ids.end()) continue;
                    const double d = s.d[static_cast<std::size_t>(it - s.corpus_ids.begin())];
                    tsv << t.name << '\t' << s.name << '\t' << t.corpus_ids[k] << '\t'
                        << (t.kind == FeatureKind::Scalar ? json(t.values[k]).dump() : t.labels[k]) << '\t'
                        << json(d).dump() << '\n';
                }
            }
        }
        write_with_sidecar(scatter_path, tsv.str(), manifest);
    }
    return kOk;
}

int cmd_split(const std::string& input, const std::string& by, const std::string& out_path) {
    if (by != "native-vs-translated") throw Error(Errc::InvalidConfig, "--by must be native-vs-translated");
    RunManifest manifest;
    manifest.command = "split";
    manifest.add_input(input);
    manifest.config = {{"by", by}};
    const SublanguageSplit split = split_sublanguages(load_surprisal_table(input));
    for (const auto& d : split.dropped) std::cerr << "warning: dropped empty sub-language " << d << '\n';
    std::ostringstream tsv;
    write_surprisal_table(split.table, tsv);
    write_with_sidecar(out_path, tsv.str(), manifest);
    return kOk;
}

int cmd_holdout(const std::string& input, std::size_t block, std::size_t per_block, const std::string& train_path,
                const std::string& heldout_path) {
    RunManifest manifest;
    manifest.command = "holdout";
    manifest.add_input(input);
    manifest.config = {{"block", block}, {"per_block", per_block}};
    const TrainHeldout split = split_train_heldout(load_surprisal_table(input), block, per_block);
    std::ostringstream train, heldout;
    write_surprisal_table(split.train, train);
    write_surprisal_table(split.heldout, heldout);
    write_with_sidecar(train_path, train.str(), manifest);
    write_with_sidecar(heldout_path, heldout.str(), manifest);
    return kOk;
}

int cmd_dispersion(const std::string& fit_path, const std::string& table_path, const std::string& out_path) {
    RunManifest manifest;
    manifest.command = "dispersion";
    manifest.add_input(fit_path);
    manifest.add_input(table_path);
    const FitResult fit = fit_from_json(read_json_file(fit_path));
    const SurprisalTable table = load_surprisal_table(table_path);
    std::vector<CorpusGroup> groups;
    for (const auto& g : corpus_groups(table)) {
        CorpusGroup mapped{g.id, {}};
        for (std::size_t j : g.members) {
            const auto& id = table.corpora()[j];
            const auto it = std::find(fit.corpora.begin(), fit.corpora.end(), id);
            if (it == fit.corpora.end()) throw Error(Errc::UnknownCorpus, "corpus " + id + " is not in the fit");
            mapped.members.push_back(static_cast<std::size_t>(it - fit.corpora.begin()));
        }
        groups.push_back(std::move(mapped));
    }
    json out = to_json(group_dispersion(fit, groups));
    out["manifest"] = manifest.to_json();
    write_json_file(out, out_path);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"langdiff: per-language difficulty estimation from parallel sentence surprisals"};
    app.require_subcommand(1);

    int threads = 1;
    if (const char* env = std::getenv("LANGDIFF_THREADS")) {
        try {
            threads = std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring invalid LANGDIFF_THREADS='" << env << "'\n";
        }
    }
    app.add_option("--threads", threads, "Worker threads (overrides LANGDIFF_THREADS; default 1)")
        ->check(CLI::PositiveNumber);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit difficulties by MAP estimation");
    fit->add_option("--input", fa.input, "Surprisal table (TSV)")->required()->check(CLI::ExistingFile);
    fit->add_option("--model", fa.model, "m1 | m2 | m2l | m3")->capture_default_str();
    fit->add_option("--constraint", fa.constraint, "sum-zero | sum-J | none")->capture_default_str();
    fit->add_option("--init", fa.init, "Initialisation of the first run: sensible | random")->capture_default_str();
    fit->add_option("--tol", fa.tol, "Gradient-norm tolerance")->capture_default_str();
    fit->add_option("--max-iter", fa.max_iter, "Iteration cap per run")->capture_default_str();
    fit->add_option("--restarts", fa.restarts, "Additional random restarts")->capture_default_str();
    fit->add_option("--seed", fa.seed, "Seed for random restarts")->capture_default_str();
    fit->add_option("--huber-delta", fa.huber_delta, "m3: quadratic/linear threshold")->capture_default_str();
    fit->add_option("--laplace-b", fa.laplace_b, "m3: sparse-noise Laplace scale")->capture_default_str();
    fit->add_option("--out", fa.out, "FitResult JSON")->required();
    fit->add_option("--out-tsv", fa.out_tsv, "Difficulties TSV (default: --out with .tsv)");

    std::string eval_fit, eval_heldout, eval_out;
    auto* eval = app.add_subcommand("eval", "Held-out log-likelihood with refitted intent sizes");
    eval->add_option("--fit", eval_fit, "FitResult JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--heldout", eval_heldout, "Held-out surprisal table (TSV)")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", eval_out, "Output JSON")->required();

    std::string sim_config, sim_table, sim_truth;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic surprisal table");
    sim->add_option("--config", sim_config, "Simulation config JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--out-table", sim_table, "Output table (TSV)")->required();
    sim->add_option("--out-truth", sim_truth, "Ground-truth parameters (JSON)")->required();

    std::string sel_presence, sel_mode = "exact", sel_strategy = "drop-worst", sel_out;
    std::size_t sel_min_rows = 0, sel_cap = kExactColumnCap;
    auto* sel = app.add_subcommand("select", "Choose translations maximising shared documents x translations");
    sel->add_option("--presence", sel_presence, "doc_id<TAB>translation_id pairs")->required()->check(CLI::ExistingFile);
    sel->add_option("--min-rows", sel_min_rows, "Minimum number of shared documents")->capture_default_str();
    sel->add_option("--mode", sel_mode, "exact | greedy")
        ->check(CLI::IsMember({"exact", "greedy"}))
        ->capture_default_str();
    sel->add_option("--strategy", sel_strategy, "greedy: drop-worst | add-best")
        ->check(CLI::IsMember({"drop-worst", "add-best"}))
        ->capture_default_str();
    sel->add_option("--max-exact-cols", sel_cap, "Column cap for exact search")->capture_default_str();
    sel->add_option("--out", sel_out, "Solution JSON")->required();

    std::vector<std::string> cor_fits, cor_features;
    double cor_alpha = 0.05;
    std::string cor_out, cor_scatter;
    auto* cor = app.add_subcommand("correlate", "Correlate difficulties with corpus features (BH-corrected)");
    cor->add_option("--difficulties", cor_fits, "FitResult JSON files")->required()->check(CLI::ExistingFile);
    cor->add_option("--features", cor_features, "Feature TSV files")->required()->check(CLI::ExistingFile);
    cor->add_option("--alpha", cor_alpha, "FDR level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    cor->add_option("--out", cor_out, "Report (.json or .tsv)")->required();
    cor->add_option("--scatter", cor_scatter, "Optional plot-ready feature/difficulty pairs (TSV)");

    std::string split_input, split_by = "native-vs-translated", split_out;
    auto* split = app.add_subcommand("split", "Split corpora into native/translated sub-languages");
    split->add_option("--input", split_input, "Surprisal table with origin_lang")->required()->check(CLI::ExistingFile);
    split->add_option("--by", split_by, "native-vs-translated")->capture_default_str();
    split->add_option("--out", split_out, "Relabelled table (TSV)")->required();

    std::string ho_input, ho_train, ho_heldout;
    std::size_t ho_block = 30, ho_per_block = 5;
    auto* ho = app.add_subcommand("holdout", "Blockwise train/held-out split by intent order");
    ho->add_option("--input", ho_input, "Surprisal table (TSV)")->required()->check(CLI::ExistingFile);
    ho->add_option("--block", ho_block, "Block length in intents")->capture_default_str();
    ho->add_option("--per-block", ho_per_block, "Held-out intents at the end of each block")->capture_default_str();
    ho->add_option("--out-train", ho_train, "Training table (TSV)")->required();
    ho->add_option("--out-heldout", ho_heldout, "Held-out table (TSV)")->required();

    std::string disp_fit, disp_table, disp_out;
    auto* disp = app.add_subcommand("dispersion", "Per-group difficulty mean and sample sd");
    disp->add_option("--fit", disp_fit, "FitResult JSON")->required()->check(CLI::ExistingFile);
    disp->add_option("--table", disp_table, "Table whose group column defines the groups")
        ->required()
        ->check(CLI::ExistingFile);
    disp->add_option("--out", disp_out, "Output JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    omp_set_num_threads(threads);
    try {
        if (*fit) return cmd_fit(fa);
        if (*eval) return cmd_eval(eval_fit, eval_heldout, eval_out);
        if (*sim) return cmd_simulate(sim_config, sim_table, sim_truth);
        if (*sel) return cmd_select(sel_presence, sel_min_rows, sel_mode, sel_strategy, sel_cap, sel_out);
        if (*cor) return cmd_correlate(cor_fits, cor_features, cor_alpha, cor_out, cor_scatter);
        if (*split) return cmd_split(split_input, split_by, split_out);
        if (*ho) return cmd_holdout(ho_input, ho_block, ho_per_block, ho_train, ho_heldout);
        if (*disp) return cmd_dispersion(disp_fit, disp_table, disp_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == Errc::Infeasible ? kInfeasible : kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}
