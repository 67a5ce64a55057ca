#include "langdiff/subset.hpp"

#include "langdiff/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cassert>
#include <fstream>
#include <istream>
#include <unordered_map>

namespace langdiff {

PresenceMatrix::PresenceMatrix(std::vector<std::string> rows, std::vector<std::string> cols)
    : rows_(std::move(rows)), cols_(std::move(cols)), words_((rows_.size() + 63) / 64),
      bits_(words_ * cols_.size(), 0) {}

void PresenceMatrix::set(std::size_t row, std::size_t col) {
    bits_[col * words_ + row / 64] |= std::uint64_t{1} << (row % 64);
}

bool PresenceMatrix::get(std::size_t row, std::size_t col) const noexcept {
    return (bits_[col * words_ + row / 64] >> (row % 64)) & 1u;
}

std::vector<std::size_t> PresenceMatrix::shared_rows(const std::vector<std::size_t>& cols) const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < num_rows(); ++r) {
        if (std::all_of(cols.begin(), cols.end(), [&](std::size_t c) { return get(r, c); }))
            out.push_back(r);
    }
    return out;
}

PresenceMatrix read_presence_matrix(std::istream& in) {
    std::vector<std::string> rows, cols;
    std::unordered_map<std::string, std::size_t> row_index, col_index;
    std::vector<std::pair<std::size_t, std::size_t>> ones;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        if (lineno == 1 && line == "doc_id\ttranslation_id") continue;
        const auto f = split_tabs(line);
        if (f.size() != 2 || f[0].empty() || f[1].empty())
            throw Error(Errc::MalformedRow, "expected doc_id<TAB>translation_id (line " +
                                                std::to_string(lineno) + ")");
        auto [r, new_row] = row_index.try_emplace(f[0], rows.size());
        if (new_row) rows.push_back(f[0]);
        auto [c, new_col] = col_index.try_emplace(f[1], cols.size());
        if (new_col) cols.push_back(f[1]);
        ones.emplace_back(r->second, c->second);
    }
    PresenceMatrix m(std::move(rows), std::move(cols));
    for (auto [r, c] : ones) m.set(r, c);
    return m;
}

PresenceMatrix load_presence_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return read_presence_matrix(in);
}

bool better_subset(std::int64_t obj_a, const std::vector<std::size_t>& cols_a, std::int64_t obj_b,
                   const std::vector<std::size_t>& cols_b) {
    if (obj_a != obj_b) return obj_a > obj_b;
    if (cols_a.size() != cols_b.size()) return cols_a.size() > cols_b.size();
    return cols_a < cols_b;
}

namespace {

using Mask = std::uint32_t;

std::vector<std::size_t> mask_to_cols(Mask mask) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; mask; ++c, mask >>= 1)
        if (mask & 1u) out.push_back(c);
    return out;
}

/// Lexicographic comparison of equal-size column sets held as bitmasks.
bool lex_smaller(Mask a, Mask b) {
    const Mask diff = a ^ b;
    return diff && (a & (diff & -diff));
}

struct Incumbent {
    std::int64_t objective = -1;
    Mask mask = 0;
    int size = 0;

    bool beaten_by(std::int64_t obj, Mask m, int sz) const {
        if (obj != objective) return obj > objective;
        if (sz != size) return sz > size;
        return lex_smaller(m, mask);
    }
};

/// Depth-first enumeration of supersets of S obtained by adding columns >= start.
class BranchAndBound {
public:
    BranchAndBound(const PresenceMatrix& m, std::size_t min_rows, std::atomic<std::int64_t>* shared_best)
        : m_(m), min_rows_(min_rows), shared_best_(shared_best), ncols_(m.num_cols()),
          words_(m.words()), stack_((ncols_ + 1) * std::max<std::size_t>(words_, 1)) {}

    /// Evaluates {first} and its extensions.
    void run_from(std::size_t first) {
        const std::uint64_t* col = m_.column(first);
        std::uint64_t* level = stack_.data();
        std::size_t count = 0;
        for (std::size_t w = 0; w < words_; ++w) {
            level[w] = col[w];
            count += static_cast<std::size_t>(std::popcount(col[w]));
        }
        const auto root_bound = static_cast<std::int64_t>(m_.num_rows() * ncols_);
        visit(Mask{1} << first, 1, level, count, first + 1, root_bound);
    }

    const Incumbent& best() const { return best_; }

private:
    void visit(Mask mask, int size, const std::uint64_t* shared, std::size_t count,
               std::size_t next, std::int64_t parent_bound) {
        if (count < min_rows_) return; // shared rows only shrink further down
        const auto obj = static_cast<std::int64_t>(count) * size;
        assert(obj <= parent_bound && "branch-and-bound bound is not admissible");
        (void)parent_bound;
        if (best_.beaten_by(obj, mask, size)) {
            best_ = {obj, mask, size};
            if (shared_best_) {
                std::int64_t cur = shared_best_->load(std::memory_order_relaxed);
                while (obj > cur && !shared_best_->compare_exchange_weak(cur, obj)) {
                }
            }
        }

        const std::size_t remaining = ncols_ - next;
        if (remaining == 0) return;
        const auto max_size = size + static_cast<int>(remaining);
        const auto bound = static_cast<std::int64_t>(count) * max_size;
        if (bound < best_.objective) return;
        if (bound == best_.objective && max_size < best_.size) return;
        if (shared_best_ && bound < shared_best_->load(std::memory_order_relaxed)) return;

        std::uint64_t* child = stack_.data() + static_cast<std::size_t>(size) * words_;
        for (std::size_t c = next; c < ncols_; ++c) {
            const std::uint64_t* col = m_.column(c);
            std::size_t child_count = 0;
            for (std::size_t w = 0; w < words_; ++w) {
                child[w] = shared[w] & col[w];
                child_count += static_cast<std::size_t>(std::popcount(child[w]));
            }
            visit(mask | (Mask{1} << c), size + 1, child, child_count, c + 1, bound);
        }
    }

    const PresenceMatrix& m_;
    std::size_t min_rows_;
    std::atomic<std::int64_t>* shared_best_;
    std::size_t ncols_;
    std::size_t words_;
    std::vector<std::uint64_t> stack_;
    Incumbent best_;
};

SubsetSolution finish(const PresenceMatrix& m, const std::vector<std::size_t>& cols, bool optimal) {
    SubsetSolution s;
    s.chosen_cols = cols;
    s.shared_rows = m.shared_rows(cols);
    s.objective = static_cast<std::int64_t>(s.shared_rows.size() * cols.size());
    s.optimal = optimal;
    return s;
}

void check_exact(const PresenceMatrix& m, std::size_t column_cap) {
    if (m.num_cols() > column_cap || m.num_cols() > 31)
        throw Error(Errc::TooManyColumnsForExact,
                    std::to_string(m.num_cols()) + " columns exceed the exact-search cap of " +
                        std::to_string(std::min<std::size_t>(column_cap, 31)));
}

SubsetSolution infeasible(std::size_t min_rows) {
    throw Error(Errc::Infeasible,
                "no column subset shares at least " + std::to_string(min_rows) + " rows");
}

} // namespace

SubsetSolution select_exact_serial(const PresenceMatrix& m, std::size_t min_rows,
                                   std::size_t column_cap) {
    check_exact(m, column_cap);
    BranchAndBound search(m, min_rows, nullptr);
    Incumbent best;
    // A single search object carries its incumbent across roots.
    for (std::size_t c = 0; c < m.num_cols(); ++c) search.run_from(c);
    best = search.best();
    if (best.objective < 0) return infeasible(min_rows);
    return finish(m, mask_to_cols(best.mask), true);
}

SubsetSolution select_exact(const PresenceMatrix& m, std::size_t min_rows, std::size_t column_cap) {
    check_exact(m, column_cap);
    const auto ncols = static_cast<std::ptrdiff_t>(m.num_cols());
    std::atomic<std::int64_t> shared_best{-1};
    std::vector<Incumbent> per_root(m.num_cols());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t c = 0; c < ncols; ++c) {
        BranchAndBound search(m, min_rows, &shared_best);
        search.run_from(static_cast<std::size_t>(c));
        per_root[c] = search.best();
    }

    Incumbent best;
    for (const auto& inc : per_root)
        if (inc.objective >= 0 && best.beaten_by(inc.objective, inc.mask, inc.size)) best = inc;
    if (best.objective < 0) return infeasible(min_rows);
    return finish(m, mask_to_cols(best.mask), true);
}

// ---------------------------------------------------------------------------
// Greedy

namespace {

struct Path {
    std::int64_t objective = -1;
    std::vector<std::size_t> cols;

    void offer(std::int64_t obj, std::vector<std::size_t> candidate) {
        std::sort(candidate.begin(), candidate.end());
        if (objective < 0 || better_subset(obj, candidate, objective, cols)) {
            objective = obj;
            cols = std::move(candidate);
        }
    }
};

std::size_t column_count(const PresenceMatrix& m, std::size_t c) {
    std::size_t n = 0;
    const std::uint64_t* col = m.column(c);
    for (std::size_t w = 0; w < m.words(); ++w) n += static_cast<std::size_t>(std::popcount(col[w]));
    return n;
}

void best_single(const PresenceMatrix& m, std::size_t min_rows, Path& path) {
    for (std::size_t c = 0; c < m.num_cols(); ++c) {
        const std::size_t n = column_count(m, c);
        if (n >= min_rows) path.offer(static_cast<std::int64_t>(n), {c});
    }
}

void greedy_add(const PresenceMatrix& m, std::size_t min_rows, Path& path) {
    if (path.objective < 0) return;
    std::vector<std::size_t> chosen = path.cols;
    std::vector<char> in(m.num_cols(), 0);
    in[chosen.front()] = 1;
    std::vector<std::uint64_t> shared(m.column(chosen.front()), m.column(chosen.front()) + m.words());
    std::vector<std::uint64_t> tmp(m.words());
    while (chosen.size() < m.num_cols()) {
        std::int64_t best_obj = -1;
        std::size_t best_col = 0;
        for (std::size_t c = 0; c < m.num_cols(); ++c) {
            if (in[c]) continue;
            std::size_t n = 0;
            const std::uint64_t* col = m.column(c);
            for (std::size_t w = 0; w < m.words(); ++w)
                n += static_cast<std::size_t>(std::popcount(shared[w] & col[w]));
            if (n < min_rows) continue;
            const auto obj = static_cast<std::int64_t>(n * (chosen.size() + 1));
            if (obj > best_obj) best_obj = obj, best_col = c;
        }
        if (best_obj < 0) break;
        in[best_col] = 1;
        chosen.push_back(best_col);
        const std::uint64_t* col = m.column(best_col);
        for (std::size_t w = 0; w < m.words(); ++w) shared[w] &= col[w];
        path.offer(best_obj, chosen);
    }
}

void greedy_drop(const PresenceMatrix& m, std::size_t min_rows, Path& path) {
    const std::size_t R = m.num_rows(), C = m.num_cols();
    // Per row: how many chosen columns miss it, and the sum of their indices
    // (which identifies the column when exactly one misses it).
    std::vector<std::size_t> misses(R, 0), miss_sum(R, 0);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < R; ++r)
            if (!m.get(r, c)) ++misses[r], miss_sum[r] += c;

    std::vector<char> in(C, 1);
    std::size_t size = C;
    std::size_t shared = static_cast<std::size_t>(std::count(misses.begin(), misses.end(), 0u));
    const auto current = [&] {
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < C; ++c)
            if (in[c]) cols.push_back(c);
        return cols;
    };
    if (shared >= min_rows) path.offer(static_cast<std::int64_t>(shared * size), current());

    std::vector<std::size_t> gain(C);
    while (size > 1) {
        std::fill(gain.begin(), gain.end(), 0);
        for (std::size_t r = 0; r < R; ++r)
            if (misses[r] == 1) ++gain[miss_sum[r]];
        std::int64_t best_obj = -1;
        std::size_t best_col = 0;
        for (std::size_t c = 0; c < C; ++c) {
            if (!in[c]) continue;
            const auto obj = static_cast<std::int64_t>((shared + gain[c]) * (size - 1));
            if (obj > best_obj) best_obj = obj, best_col = c;
        }
        in[best_col] = 0;
        --size;
        shared += gain[best_col];
        for (std::size_t r = 0; r < R; ++r)
            if (!m.get(r, best_col)) --misses[r], miss_sum[r] -= best_col;
        if (shared >= min_rows) path.offer(best_obj, current());
    }
}

} // namespace

SubsetSolution select_greedy(const PresenceMatrix& m, std::size_t min_rows, GreedyStrategy strategy) {
    Path path;
    best_single(m, min_rows, path);
    if (strategy == GreedyStrategy::AddBestCol)
        greedy_add(m, min_rows, path);
    else
        greedy_drop(m, min_rows, path);
    if (path.objective < 0) return infeasible(min_rows);
    return finish(m, path.cols, false);
}

} // namespace langdiff
