#include "helpers.hpp"

#include "langdiff/subset.hpp"

#include <doctest.h>
#include <omp.h>

#include <random>
#include <sstream>

using namespace langdiff;
using testing::error_code;

namespace {

PresenceMatrix from_rows(const std::vector<std::string>& rows) {
    std::vector<std::string> r, c;
    for (std::size_t i = 0; i < rows.size(); ++i) r.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < rows[0].size(); ++j) c.push_back("c" + std::to_string(j));
    PresenceMatrix m(r, c);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            if (rows[i][j] == '1') m.set(i, j);
    return m;
}

PresenceMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> rr, cc;
    for (std::size_t i = 0; i < rows; ++i) rr.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) cc.push_back("c" + std::to_string(j));
    PresenceMatrix m(rr, cc);
    // Column densities vary so that subsets have genuinely different trade-offs.
    std::vector<double> density(cols);
    for (double& d : density) d = 0.5 + 0.5 * u(rng);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (u(rng) < density[j]) m.set(i, j);
    return m;
}

struct Brute {
    std::vector<std::size_t> cols;
    std::int64_t objective = -1;
};

/// Enumerates every non-empty column subset.
Brute brute_force(const PresenceMatrix& m, std::size_t min_rows) {
    Brute best;
    const std::size_t C = m.num_cols();
    for (std::uint32_t mask = 1; mask < (1u << C); ++mask) {
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < C; ++j)
            if (mask >> j & 1u) cols.push_back(j);
        std::size_t shared = 0;
        for (std::size_t i = 0; i < m.num_rows(); ++i) {
            bool all = true;
            for (std::size_t j : cols) all = all && m.get(i, j);
            shared += all;
        }
        if (shared < min_rows) continue;
        const auto obj = static_cast<std::int64_t>(shared * cols.size());
        const bool better = obj > best.objective ||
                            (obj == best.objective &&
                             (cols.size() > best.cols.size() || (cols.size() == best.cols.size() && cols < best.cols)));
        if (better) best = {cols, obj};
    }
    return best;
}

} // namespace

TEST_CASE("complete matrix selects everything") {
    const auto m = from_rows({"1111", "1111", "1111", "1111", "1111"});
    const auto s = select_exact(m, 0);
    CHECK(s.chosen_cols == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(s.shared_rows.size() == 5);
    CHECK(s.objective == 20);
    CHECK(s.optimal);
    const auto g = select_greedy(m, 0);
    CHECK(g.objective == 20);
    CHECK_FALSE(g.optimal);
    CHECK(select_greedy(m, 0, GreedyStrategy::AddBestCol).objective == 20);
}

TEST_CASE("a column that kills shared rows is left out") {
    const auto m = from_rows({"111", "110", "110", "110"});
    const auto s = select_exact(m, 0);
    CHECK(s.chosen_cols == std::vector<std::size_t>{0, 1});
    CHECK(s.objective == 8);
    CHECK(s.shared_rows == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("ties prefer more columns, then the lexicographically smallest set") {
    // {0}: 4 rows -> 4; {0,1}: 2 rows -> 4; {0,2}: 2 rows -> 4; {0,1,2}: 1 row -> 3.
    const auto m = from_rows({"110", "100", "101", "111"});
    const auto s = select_exact(m, 0);
    CHECK(s.objective == 4);
    CHECK(s.chosen_cols == std::vector<std::size_t>{0, 1});
}

TEST_CASE("infeasible and over-cap instances") {
    const auto m = from_rows({"11", "11"});
    CHECK(error_code([&] { select_exact(m, 3); }) == Errc::Infeasible);
    CHECK(error_code([&] { select_greedy(m, 3); }) == Errc::Infeasible);
    std::mt19937_64 rng(1);
    const auto wide = random_matrix(rng, 10, 25);
    CHECK(error_code([&] { select_exact(wide, 0); }) == Errc::TooManyColumnsForExact);
    CHECK(error_code([&] { select_exact(m, 0, 1); }) == Errc::TooManyColumnsForExact);
    CHECK_NOTHROW(select_greedy(wide, 0));
}

TEST_CASE("exact search agrees with enumeration; greedy never beats it") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> cols(1, 12), rows(1, 60);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = random_matrix(rng, rows(rng), cols(rng));
        const std::size_t min_rows = trial % 3 == 0 ? m.num_rows() / 4 : 0;
        const auto oracle = brute_force(m, min_rows);
        if (oracle.objective < 0) {
            CHECK(error_code([&] { select_exact(m, min_rows); }) == Errc::Infeasible);
            continue;
        }
        const auto exact = select_exact(m, min_rows);
        CHECK(exact.objective == oracle.objective);
        CHECK(exact.chosen_cols == oracle.cols);
        CHECK(exact.shared_rows == m.shared_rows(exact.chosen_cols));
        CHECK(exact.objective == static_cast<std::int64_t>(exact.shared_rows.size() * exact.chosen_cols.size()));
        for (auto strategy : {GreedyStrategy::DropWorstCol, GreedyStrategy::AddBestCol}) {
            const auto g = select_greedy(m, min_rows, strategy);
            CHECK(g.objective <= exact.objective);
            CHECK(g.shared_rows == m.shared_rows(g.chosen_cols));
            CHECK(g.shared_rows.size() >= min_rows);
            // Never worse than the best feasible single column.
            std::int64_t single = 0;
            for (std::size_t j = 0; j < m.num_cols(); ++j) {
                const auto s = m.shared_rows({j}).size();
                if (s >= min_rows) single = std::max<std::int64_t>(single, s);
            }
            CHECK(g.objective >= single);
        }
    }
}

TEST_CASE("parallel exact search equals the serial reference") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_matrix(rng, 200, 16);
        omp_set_num_threads(4);
        const auto a = select_exact(m, 10);
        omp_set_num_threads(1);
        const auto b = select_exact_serial(m, 10);
        CHECK(a.chosen_cols == b.chosen_cols);
        CHECK(a.objective == b.objective);
    }
}

TEST_CASE("presence file parsing") {
    std::istringstream with_header("doc_id\ttranslation_id\nv1\tkjv\nv1\tweb\nv2\tkjv\n");
    const auto m = read_presence_matrix(with_header);
    CHECK(m.num_rows() == 2);
    CHECK(m.num_cols() == 2);
    CHECK(m.get(0, 1));
    CHECK_FALSE(m.get(1, 1));
    std::istringstream bare("v1\tkjv\nv2\tkjv\n");
    CHECK(read_presence_matrix(bare).num_rows() == 2);
    std::istringstream bad("v1 kjv\n");
    CHECK(error_code([&] { read_presence_matrix(bad); }) == Errc::MalformedRow);
}

TEST_CASE("better_subset ordering") {
    CHECK(better_subset(10, {0, 1}, 9, {0, 1, 2}));
    CHECK(better_subset(10, {0, 1}, 10, {0}));
    CHECK(better_subset(10, {0, 2}, 10, {1, 2}));
    CHECK_FALSE(better_subset(10, {1, 2}, 10, {0, 2}));
}
