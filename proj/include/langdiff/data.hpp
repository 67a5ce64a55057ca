#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace langdiff {

/// One observed surprisal y_ij, in bits.
struct Cell {
    std::uint32_t intent;
    std::uint32_t corpus;
    double surprisal;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Sparse intent x corpus matrix of sentence surprisals.
///
/// Cells are stored sorted by (intent, corpus), so the cells of intent i occupy
/// the contiguous range `cells_of_intent(i)`. Every intent has at least two
/// observed cells and every stored value is finite and strictly positive.
/// Missing cells are treated as missing completely at random by the fitting
/// code; tables with structured missingness still load, but the estimates are
/// only unbiased under that assumption.
///
/// Instances are immutable once built and safe to share across threads.
class SurprisalTable {
public:
    SurprisalTable() = default;

    std::size_t num_intents() const noexcept { return intents_.size(); }
    std::size_t num_corpora() const noexcept { return corpora_.size(); }
    std::size_t num_cells() const noexcept { return cells_.size(); }
    bool empty() const noexcept { return cells_.empty(); }

    const std::vector<std::string>& intents() const noexcept { return intents_; }
    const std::vector<std::string>& corpora() const noexcept { return corpora_; }
    std::span<const Cell> cells() const noexcept { return cells_; }
    std::span<const Cell> cells_of_intent(std::size_t i) const noexcept {
        return std::span<const Cell>(cells_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
    }
    /// CSR row pointers: cells of intent i are [offsets()[i], offsets()[i+1]).
    std::span<const std::size_t> offsets() const noexcept { return offsets_; }

    std::optional<std::size_t> find_intent(const std::string& id) const;
    std::optional<std::size_t> find_corpus(const std::string& id) const;
    std::optional<double> value(std::size_t intent, std::size_t corpus) const;

    /// Origin language of the intent (the language it was first written in).
    const std::optional<std::string>& intent_origin(std::size_t i) const { return intent_origin_[i]; }
    /// Group label of a corpus; doubles as its language code when present.
    const std::optional<std::string>& corpus_group(std::size_t j) const { return corpus_group_[j]; }
    /// Language of corpus j: its group label, or the corpus id itself.
    const std::string& corpus_language(std::size_t j) const;

    bool has_origin_metadata() const noexcept;
    bool has_group_metadata() const noexcept;

    friend bool operator==(const SurprisalTable&, const SurprisalTable&) = default;

private:
    friend class TableBuilder;

    std::vector<std::string> intents_;
    std::vector<std::string> corpora_;
    std::vector<Cell> cells_;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::optional<std::string>> intent_origin_;
    std::vector<std::optional<std::string>> corpus_group_;
};

/// Accumulates (intent, corpus, value) triples and validates them into a
/// SurprisalTable. Intents and corpora are indexed in first-seen order.
class TableBuilder {
public:
    /// `line` is only used to annotate errors (0 = unknown).
    void add(const std::string& intent, const std::string& corpus, double surprisal,
             std::size_t line = 0);
    void set_origin(const std::string& intent, const std::string& origin, std::size_t line = 0);
    void set_group(const std::string& corpus, const std::string& group, std::size_t line = 0);

    /// Throws IntentBelowPairwiseMinimum if any intent has fewer than two cells.
    SurprisalTable build() &&;

private:
    std::uint32_t intern_intent(const std::string& id);
    std::uint32_t intern_corpus(const std::string& id);

    std::vector<std::string> intents_;
    std::vector<std::string> corpora_;
    std::unordered_map<std::string, std::uint32_t> intent_index_;
    std::unordered_map<std::string, std::uint32_t> corpus_index_;
    std::vector<Cell> cells_;
    std::vector<std::optional<std::string>> origin_;
    std::vector<std::optional<std::string>> group_;
};

/// Set of corpora summarised together (e.g. all Bible translations of one language).
struct CorpusGroup {
    std::string id;
    std::vector<std::size_t> members;
};

/// Groups formed from the table's `group` column; ungrouped corpora are omitted.
/// Groups are ordered by first appearance.
std::vector<CorpusGroup> corpus_groups(const SurprisalTable& table);

enum class TableFormat { Tsv };

/// Reads the tab-separated surprisal format: a header naming at least
/// `intent_id`, `corpus_id`, `surprisal` (any order), optionally `origin_lang`
/// and `group`, followed by one cell per line.
SurprisalTable load_surprisal_table(const std::filesystem::path& path,
                                    TableFormat format = TableFormat::Tsv);
SurprisalTable read_surprisal_table(std::istream& in);

/// Writes cells in storage order. Metadata columns are emitted only when some
/// intent/corpus carries them. Values use shortest round-trip formatting.
void write_surprisal_table(const SurprisalTable& table, std::ostream& out);
void save_surprisal_table(const SurprisalTable& table, const std::filesystem::path& path);

struct TrainHeldout {
    SurprisalTable train;
    SurprisalTable heldout;
};

/// Blockwise deterministic split by intent order: within each run of `block`
/// consecutive intents, the last `per_block` are held out. Requires
/// block > 2 * per_block.
TrainHeldout split_train_heldout(const SurprisalTable& table, std::size_t block,
                                 std::size_t per_block);

enum class SplitBy { NativeVsTranslated };

struct SublanguageSplit {
    SurprisalTable table;
    /// Sub-language ids that received no cells and were dropped.
    std::vector<std::string> dropped;
};

/// Replaces every corpus j by `j/native` and `j/translated`; cell (i, j) goes
/// to the native half iff the intent's origin language equals the corpus
/// language. Empty halves are dropped.
SublanguageSplit split_sublanguages(const SurprisalTable& table,
                                    SplitBy by = SplitBy::NativeVsTranslated);

/// Keeps only the given intents (by index), preserving order.
SurprisalTable select_intents(const SurprisalTable& table, std::span<const std::size_t> keep);

} // namespace langdiff
