#include "langdiff/data.hpp"

#include "langdiff/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace langdiff {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::DuplicateCell: return "DuplicateCell";
    case Errc::NonPositiveSurprisal: return "NonPositiveSurprisal";
    case Errc::IntentBelowPairwiseMinimum: return "IntentBelowPairwiseMinimum";
    case Errc::BlockTooSmall: return "BlockTooSmall";
    case Errc::MissingOriginMetadata: return "MissingOriginMetadata";
    case Errc::DomainError: return "DomainError";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::UnknownCorpus: return "UnknownCorpus";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::TooManyColumnsForExact: return "TooManyColumnsForExact";
    case Errc::Infeasible: return "Infeasible";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::InsufficientOverlap: return "InsufficientOverlap";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

// ---------------------------------------------------------------------------
// SurprisalTable

std::optional<std::size_t> SurprisalTable::find_intent(const std::string& id) const {
    auto it = std::find(intents_.begin(), intents_.end(), id);
    if (it == intents_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - intents_.begin());
}

std::optional<std::size_t> SurprisalTable::find_corpus(const std::string& id) const {
    auto it = std::find(corpora_.begin(), corpora_.end(), id);
    if (it == corpora_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - corpora_.begin());
}

std::optional<double> SurprisalTable::value(std::size_t intent, std::size_t corpus) const {
    for (const Cell& c : cells_of_intent(intent))
        if (c.corpus == corpus) return c.surprisal;
    return std::nullopt;
}

const std::string& SurprisalTable::corpus_language(std::size_t j) const {
    return corpus_group_[j] ? *corpus_group_[j] : corpora_[j];
}

bool SurprisalTable::has_origin_metadata() const noexcept {
    return std::any_of(intent_origin_.begin(), intent_origin_.end(),
                       [](const auto& o) { return o.has_value(); });
}

bool SurprisalTable::has_group_metadata() const noexcept {
    return std::any_of(corpus_group_.begin(), corpus_group_.end(),
                       [](const auto& g) { return g.has_value(); });
}

// ---------------------------------------------------------------------------
// TableBuilder

namespace {

std::string at_line(std::size_t line) {
    return line ? " (line " + std::to_string(line) + ")" : std::string();
}

} // namespace

std::uint32_t TableBuilder::intern_intent(const std::string& id) {
    auto [it, inserted] = intent_index_.try_emplace(id, static_cast<std::uint32_t>(intents_.size()));
    if (inserted) {
        intents_.push_back(id);
        origin_.emplace_back();
    }
    return it->second;
}

std::uint32_t TableBuilder::intern_corpus(const std::string& id) {
    auto [it, inserted] = corpus_index_.try_emplace(id, static_cast<std::uint32_t>(corpora_.size()));
    if (inserted) {
        corpora_.push_back(id);
        group_.emplace_back();
    }
    return it->second;
}

void TableBuilder::add(const std::string& intent, const std::string& corpus, double surprisal,
                       std::size_t line) {
    if (intent.empty() || corpus.empty())
        throw Error(Errc::MalformedRow, "empty identifier" + at_line(line));
    if (!std::isfinite(surprisal))
        throw Error(Errc::MalformedRow, "non-finite surprisal" + at_line(line));
    if (surprisal <= 0.0)
        throw Error(Errc::NonPositiveSurprisal,
                    "surprisal must be > 0 for (" + intent + ", " + corpus + ")" + at_line(line));
    cells_.push_back({intern_intent(intent), intern_corpus(corpus), surprisal});
}

void TableBuilder::set_origin(const std::string& intent, const std::string& origin,
                              std::size_t line) {
    auto& slot = origin_[intern_intent(intent)];
    if (slot && *slot != origin)
        throw Error(Errc::MalformedRow,
                    "conflicting origin_lang for intent " + intent + at_line(line));
    slot = origin;
}

void TableBuilder::set_group(const std::string& corpus, const std::string& group,
                             std::size_t line) {
    auto& slot = group_[intern_corpus(corpus)];
    if (slot && *slot != group)
        throw Error(Errc::MalformedRow, "conflicting group for corpus " + corpus + at_line(line));
    slot = group;
}

SurprisalTable TableBuilder::build() && {
    const auto by_intent_corpus = [](const Cell& a, const Cell& b) {
        return a.intent != b.intent ? a.intent < b.intent : a.corpus < b.corpus;
    };
    std::stable_sort(cells_.begin(), cells_.end(), by_intent_corpus);

    // Canonical corpus order: first appearance in intent-major order. Makes a
    // written table reload to an identical object.
    constexpr auto unset = static_cast<std::uint32_t>(-1);
    std::vector<std::uint32_t> remap(corpora_.size(), unset);
    std::vector<std::string> corpora;
    std::vector<std::optional<std::string>> groups;
    for (Cell& c : cells_) {
        if (remap[c.corpus] == unset) {
            remap[c.corpus] = static_cast<std::uint32_t>(corpora.size());
            corpora.push_back(corpora_[c.corpus]);
            groups.push_back(group_[c.corpus]);
        }
        c.corpus = remap[c.corpus];
    }
    corpora_ = std::move(corpora);
    group_ = std::move(groups);
    std::stable_sort(cells_.begin(), cells_.end(), by_intent_corpus);

    for (std::size_t k = 1; k < cells_.size(); ++k) {
        if (cells_[k].intent == cells_[k - 1].intent && cells_[k].corpus == cells_[k - 1].corpus)
            throw Error(Errc::DuplicateCell, "(" + intents_[cells_[k].intent] + ", " +
                                                 corpora_[cells_[k].corpus] + ")");
    }

    SurprisalTable t;
    t.offsets_.assign(intents_.size() + 1, 0);
    for (const Cell& c : cells_) ++t.offsets_[c.intent + 1];
    for (std::size_t i = 0; i < intents_.size(); ++i) {
        if (t.offsets_[i + 1] < 2)
            throw Error(Errc::IntentBelowPairwiseMinimum,
                        "intent " + intents_[i] + " is observed in fewer than 2 corpora");
        t.offsets_[i + 1] += t.offsets_[i];
    }

    t.intents_ = std::move(intents_);
    t.corpora_ = std::move(corpora_);
    t.cells_ = std::move(cells_);
    t.intent_origin_ = std::move(origin_);
    t.corpus_group_ = std::move(group_);
    return t;
}

std::vector<CorpusGroup> corpus_groups(const SurprisalTable& table) {
    std::vector<CorpusGroup> groups;
    for (std::size_t j = 0; j < table.num_corpora(); ++j) {
        const auto& g = table.corpus_group(j);
        if (!g) continue;
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const CorpusGroup& cg) { return cg.id == *g; });
        if (it == groups.end())
            groups.push_back({*g, {j}});
        else
            it->members.push_back(j);
    }
    return groups;
}

// ---------------------------------------------------------------------------
// TSV I/O

SurprisalTable read_surprisal_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::MalformedRow, "missing header (line 1)");
    strip_cr(line);
    const auto header = split_tabs(line);

    int col_intent = -1, col_corpus = -1, col_value = -1, col_origin = -1, col_group = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& name = header[c];
        int* slot = name == "intent_id"     ? &col_intent
                    : name == "corpus_id"   ? &col_corpus
                    : name == "surprisal"   ? &col_value
                    : name == "origin_lang" ? &col_origin
                    : name == "group"       ? &col_group
                                            : nullptr;
        if (!slot) continue;
        if (*slot >= 0) throw Error(Errc::MalformedRow, "duplicate header column " + name + " (line 1)");
        *slot = static_cast<int>(c);
    }
    if (col_intent < 0 || col_corpus < 0 || col_value < 0)
        throw Error(Errc::MalformedRow,
                    "header must contain intent_id, corpus_id and surprisal (line 1)");

    TableBuilder builder;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != header.size())
            throw Error(Errc::MalformedRow, "expected " + std::to_string(header.size()) +
                                                " fields, got " + std::to_string(fields.size()) +
                                                at_line(lineno));
        const auto value = parse_double(fields[col_value]);
        if (!value)
            throw Error(Errc::MalformedRow,
                        "non-numeric surprisal '" + fields[col_value] + "'" + at_line(lineno));
        const auto& intent = fields[col_intent];
        const auto& corpus = fields[col_corpus];
        builder.add(intent, corpus, *value, lineno);
        if (col_origin >= 0 && !fields[col_origin].empty())
            builder.set_origin(intent, fields[col_origin], lineno);
        if (col_group >= 0 && !fields[col_group].empty())
            builder.set_group(corpus, fields[col_group], lineno);
    }
    return std::move(builder).build();
}

SurprisalTable load_surprisal_table(const std::filesystem::path& path, TableFormat) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return read_surprisal_table(in);
}

void write_surprisal_table(const SurprisalTable& table, std::ostream& out) {
    const bool origin = table.has_origin_metadata();
    const bool group = table.has_group_metadata();
    out << "intent_id\tcorpus_id\tsurprisal";
    if (origin) out << "\torigin_lang";
    if (group) out << "\tgroup";
    out << '\n';
    for (const Cell& c : table.cells()) {
        out << table.intents()[c.intent] << '\t' << table.corpora()[c.corpus] << '\t'
            << format_double(c.surprisal);
        if (origin) out << '\t' << table.intent_origin(c.intent).value_or("");
        if (group) out << '\t' << table.corpus_group(c.corpus).value_or("");
        out << '\n';
    }
}

void save_surprisal_table(const SurprisalTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path.string());
    write_surprisal_table(table, out);
}

// ---------------------------------------------------------------------------
// Derived tables

namespace {

/// Rebuilds a table from selected intents with a corpus relabeling.
template <class CorpusFor>
SurprisalTable rebuild(const SurprisalTable& table, std::span<const std::size_t> intents,
                       CorpusFor&& corpus_for, bool keep_groups) {
    TableBuilder b;
    for (std::size_t i : intents) {
        for (const Cell& c : table.cells_of_intent(i)) {
            const std::string corpus = corpus_for(c);
            b.add(table.intents()[i], corpus, c.surprisal);
            if (const auto& o = table.intent_origin(i)) b.set_origin(table.intents()[i], *o);
            if (keep_groups)
                if (const auto& g = table.corpus_group(c.corpus)) b.set_group(corpus, *g);
        }
    }
    return std::move(b).build();
}

} // namespace

SurprisalTable select_intents(const SurprisalTable& table, std::span<const std::size_t> keep) {
    return rebuild(
        table, keep, [&](const Cell& c) { return table.corpora()[c.corpus]; }, true);
}

TrainHeldout split_train_heldout(const SurprisalTable& table, std::size_t block,
                                 std::size_t per_block) {
    if (per_block == 0 || block <= 2 * per_block)
        throw Error(Errc::BlockTooSmall, "need block > 2 * per_block (block=" +
                                             std::to_string(block) +
                                             ", per_block=" + std::to_string(per_block) + ")");
    std::vector<std::size_t> train, heldout;
    for (std::size_t i = 0; i < table.num_intents(); ++i)
        (i % block >= block - per_block ? heldout : train).push_back(i);
    return {select_intents(table, train), select_intents(table, heldout)};
}

SublanguageSplit split_sublanguages(const SurprisalTable& table, SplitBy) {
    for (std::size_t i = 0; i < table.num_intents(); ++i)
        if (!table.intent_origin(i))
            throw Error(Errc::MissingOriginMetadata, "intent " + table.intents()[i] +
                                                         " has no origin_lang");

    // Count both halves of each corpus first so empty ones can be reported.
    std::vector<std::size_t> native(table.num_corpora(), 0), translated(table.num_corpora(), 0);
    for (const Cell& c : table.cells()) {
        const bool is_native = *table.intent_origin(c.intent) == table.corpus_language(c.corpus);
        ++(is_native ? native : translated)[c.corpus];
    }
    SublanguageSplit out;
    for (std::size_t j = 0; j < table.num_corpora(); ++j) {
        if (native[j] == 0) out.dropped.push_back(table.corpora()[j] + "/native");
        if (translated[j] == 0) out.dropped.push_back(table.corpora()[j] + "/translated");
    }

    std::vector<std::size_t> all(table.num_intents());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    out.table = rebuild(
        table, all,
        [&](const Cell& c) {
            const bool is_native =
                *table.intent_origin(c.intent) == table.corpus_language(c.corpus);
            return table.corpora()[c.corpus] + (is_native ? "/native" : "/translated");
        },
        true);
    return out;
}

} // namespace langdiff
