#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace langdiff {

/// Binary document x translation availability matrix, stored column-wise as
/// row bitsets.
class PresenceMatrix {
public:
    PresenceMatrix() = default;
    PresenceMatrix(std::vector<std::string> rows, std::vector<std::string> cols);

    std::size_t num_rows() const noexcept { return rows_.size(); }
    std::size_t num_cols() const noexcept { return cols_.size(); }
    std::size_t words() const noexcept { return words_; }
    const std::vector<std::string>& row_ids() const noexcept { return rows_; }
    const std::vector<std::string>& col_ids() const noexcept { return cols_; }

    void set(std::size_t row, std::size_t col);
    bool get(std::size_t row, std::size_t col) const noexcept;
    const std::uint64_t* column(std::size_t col) const noexcept { return bits_.data() + col * words_; }

    /// Rows present in every given column (all rows for an empty set).
    std::vector<std::size_t> shared_rows(const std::vector<std::size_t>& cols) const;

private:
    std::vector<std::string> rows_;
    std::vector<std::string> cols_;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Reads `doc_id<TAB>translation_id` pairs, one present cell per line. A first
/// line of exactly `doc_id<TAB>translation_id` is treated as a header. Rows and
/// columns are indexed in first-seen order.
PresenceMatrix read_presence_matrix(std::istream& in);
PresenceMatrix load_presence_matrix(const std::filesystem::path& path);

struct SubsetSolution {
    std::vector<std::size_t> chosen_cols; ///< ascending
    std::vector<std::size_t> shared_rows; ///< ascending
    std::int64_t objective = 0;           ///< |shared_rows| * |chosen_cols|
    bool optimal = false;
};

inline constexpr std::size_t kExactColumnCap = 24;

/// Exhaustive branch-and-bound over column subsets maximising
/// |shared| * |cols| subject to |shared| >= min_rows. Ties prefer more
/// columns, then the lexicographically smallest column list. Subtrees rooted at
/// each first column are searched in parallel; the result does not depend on
/// the thread count.
SubsetSolution select_exact(const PresenceMatrix& m, std::size_t min_rows,
                            std::size_t column_cap = kExactColumnCap);

/// Single-threaded reference for select_exact.
SubsetSolution select_exact_serial(const PresenceMatrix& m, std::size_t min_rows,
                                   std::size_t column_cap = kExactColumnCap);

enum class GreedyStrategy { DropWorstCol, AddBestCol };

/// Heuristic search along a greedy column path; returns the best feasible set
/// seen, never worse than the best single column.
SubsetSolution select_greedy(const PresenceMatrix& m, std::size_t min_rows,
                             GreedyStrategy strategy = GreedyStrategy::DropWorstCol);

/// True if `a` beats `b` under the objective and tie-break order.
bool better_subset(std::int64_t obj_a, const std::vector<std::size_t>& cols_a,
                   std::int64_t obj_b, const std::vector<std::size_t>& cols_b);

} // namespace langdiff
