#include "helpers.hpp"

#include "langdiff/data.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace langdiff;
using testing::error_code;
using testing::table_from;

namespace {

std::string header() { return "intent_id\tcorpus_id\tsurprisal\n"; }

/// n intents x 3 corpora, complete.
SurprisalTable numbered(std::size_t n) {
    TableBuilder b;
    for (std::size_t i = 0; i < n; ++i)
        for (const char* c : {"a", "b", "c"}) b.add("i" + std::to_string(1000 + i), c, 1.0 + i);
    return std::move(b).build();
}

std::multiset<double> values(const SurprisalTable& t) {
    std::multiset<double> out;
    for (const Cell& c : t.cells()) out.insert(c.surprisal);
    return out;
}

} // namespace

TEST_CASE("minimal complete table") {
    const auto t = table_from(header() + "x\tp\t2.0\nx\tq\t2.0\ny\tp\t4.0\ny\tq\t4.0\n");
    CHECK(t.num_intents() == 2);
    CHECK(t.num_corpora() == 2);
    CHECK(t.num_cells() == 4);
    CHECK(t.value(1, 1) == 4.0);
    CHECK_FALSE(t.has_origin_metadata());
}

TEST_CASE("missing translations pattern loads with 9 of 12 cells") {
    const auto t = load_surprisal_table(LANGDIFF_FIXTURES "/fig1.tsv");
    CHECK(t.num_intents() == 4);
    CHECK(t.num_corpora() == 3);
    CHECK(t.num_cells() == 9);
    const auto bg = *t.find_corpus("bg"), en = *t.find_corpus("en"), de = *t.find_corpus("de");
    CHECK_FALSE(t.value(*t.find_intent("1"), bg));
    CHECK_FALSE(t.value(*t.find_intent("3"), en));
    CHECK_FALSE(t.value(*t.find_intent("4"), de));
    CHECK(t.value(*t.find_intent("2"), de) == 31.5);
}

TEST_CASE("ingestion errors") {
    CHECK(error_code([] { table_from(header() + "x\tp\t2.0\nx\tq\t3.0\ny\tp\t4.0\n"); }) ==
          Errc::IntentBelowPairwiseMinimum);
    CHECK(error_code([] { table_from(header() + "x\tp\t2.0\nx\tp\t3.0\n"); }) == Errc::DuplicateCell);
    CHECK(error_code([] { table_from(header() + "x\tp\t0\nx\tq\t3.0\n"); }) == Errc::NonPositiveSurprisal);
    CHECK(error_code([] { table_from(header() + "x\tp\t-1\nx\tq\t3.0\n"); }) ==
          Errc::NonPositiveSurprisal);
    CHECK(error_code([] { table_from(header() + "x\tp\tabc\nx\tq\t3.0\n"); }) == Errc::MalformedRow);
    CHECK(error_code([] { table_from(header() + "x\tp\t1.0\textra\nx\tq\t3.0\n"); }) == Errc::MalformedRow);
    CHECK(error_code([] { table_from("intent_id\tsurprisal\nx\t1\n"); }) == Errc::MalformedRow);
    CHECK(error_code([] { table_from(""); }) == Errc::MalformedRow);
    CHECK(error_code([] { load_surprisal_table("/nonexistent/table.tsv"); }) == Errc::Io);
}

TEST_CASE("error messages carry the line number") {
    try {
        table_from(header() + "x\tp\t2.0\nx\tq\tnan?\n");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("header columns in any order, CRLF tolerated") {
    const auto t = table_from("surprisal\tcorpus_id\tintent_id\r\n2.5\tp\tx\r\n3.5\tq\tx\r\n");
    CHECK(t.num_cells() == 2);
    CHECK(t.value(0, *t.find_corpus("q")) == 3.5);
}

TEST_CASE("write then read reproduces the table") {
    const auto t = load_surprisal_table(LANGDIFF_FIXTURES "/toy.tsv");
    REQUIRE(t.has_origin_metadata());
    REQUIRE(t.has_group_metadata());
    std::stringstream buf;
    write_surprisal_table(t, buf);
    const auto back = read_surprisal_table(buf);
    CHECK(back == t);

    // Values that need all 17 digits survive as well.
    TableBuilder b;
    b.add("a", "p", 0.1 + 0.2);
    b.add("a", "q", 1.0 / 3.0);
    const auto small = std::move(b).build();
    std::stringstream buf2;
    write_surprisal_table(small, buf2);
    CHECK(read_surprisal_table(buf2) == small);
}

TEST_CASE("storage order does not depend on input row order") {
    const auto a = table_from(header() + "x\tp\t1\nx\tq\t2\ny\tq\t3\ny\tp\t4\n");
    const auto b = table_from(header() + "y\tp\t4\nx\tq\t2\ny\tq\t3\nx\tp\t1\n");
    CHECK(values(a) == values(b));
    CHECK(a.num_cells() == b.num_cells());
}

TEST_CASE("blockwise train / held-out split") {
    SUBCASE("one block of 30") {
        const auto s = split_train_heldout(numbered(30), 30, 5);
        CHECK(s.train.num_intents() == 25);
        CHECK(s.heldout.num_intents() == 5);
        CHECK(s.heldout.intents().front() == "i1025");
    }
    SUBCASE("two blocks of 30") {
        const auto s = split_train_heldout(numbered(60), 30, 5);
        CHECK(s.train.num_intents() == 50);
        REQUIRE(s.heldout.num_intents() == 10);
        const std::vector<std::string> expected{"i1025", "i1026", "i1027", "i1028", "i1029",
                                                "i1055", "i1056", "i1057", "i1058", "i1059"};
        CHECK(s.heldout.intents() == expected);
    }
    SUBCASE("partition") {
        const auto t = numbered(77);
        const auto s = split_train_heldout(t, 12, 3);
        std::set<std::string> all(s.train.intents().begin(), s.train.intents().end());
        for (const auto& id : s.heldout.intents()) CHECK(all.insert(id).second);
        CHECK(all == std::set<std::string>(t.intents().begin(), t.intents().end()));
    }
    CHECK(error_code([] { split_train_heldout(numbered(10), 4, 2); }) == Errc::BlockTooSmall);
    CHECK(error_code([] { split_train_heldout(numbered(10), 4, 0); }) == Errc::BlockTooSmall);
}

TEST_CASE("native / translated split") {
    SUBCASE("one intent originating in each of two corpora") {
        const auto t = table_from("intent_id\tcorpus_id\tsurprisal\torigin_lang\n"
                                  "a\ten\t1\ten\na\tde\t2\ten\nb\ten\t3\tde\nb\tde\t4\tde\n");
        const auto s = split_sublanguages(t);
        CHECK(s.table.num_corpora() == 4);
        CHECK(s.dropped.empty());
        for (std::size_t j = 0; j < 4; ++j) {
            std::size_t count = 0;
            for (const Cell& c : s.table.cells()) count += c.corpus == j;
            CHECK(count == 1);
        }
        const auto a = *s.table.find_intent("a");
        CHECK(s.table.value(a, *s.table.find_corpus("en/native")) == 1.0);
        CHECK(s.table.value(a, *s.table.find_corpus("de/translated")) == 2.0);
    }
    SUBCASE("single origin drops the empty half") {
        const auto t = table_from("intent_id\tcorpus_id\tsurprisal\torigin_lang\n"
                                  "a\ten\t1\ten\na\tde\t2\ten\na\tfr\t5\ten\n"
                                  "b\ten\t3\ten\nb\tde\t4\ten\n");
        const auto s = split_sublanguages(t);
        std::set<std::string> ids(s.table.corpora().begin(), s.table.corpora().end());
        CHECK(ids == std::set<std::string>{"en/native", "de/translated", "fr/translated"});
        CHECK(std::set<std::string>(s.dropped.begin(), s.dropped.end()) ==
              std::set<std::string>{"en/translated", "de/native", "fr/native"});
    }
    SUBCASE("21 corpora become 42 sub-languages") {
        TableBuilder b;
        for (int i = 0; i < 42; ++i) {
            const std::string intent = "s" + std::to_string(i);
            b.set_origin(intent, "L" + std::to_string(i % 21));
            for (int j = 0; j < 21; ++j) b.add(intent, "L" + std::to_string(j), 10.0 + i + 0.01 * j);
        }
        const auto t = std::move(b).build();
        const auto s = split_sublanguages(t);
        CHECK(s.table.num_corpora() == 42);
        CHECK(s.table.num_cells() == t.num_cells());
        CHECK(values(s.table) == values(t));
    }
    SUBCASE("group labels define the language of a corpus") {
        const auto t = table_from("intent_id\tcorpus_id\tsurprisal\torigin_lang\tgroup\n"
                                  "a\tbible1\t1\tde\tde\na\tbible2\t2\tde\ten\n");
        const auto s = split_sublanguages(t);
        CHECK(s.table.find_corpus("bible1/native"));
        CHECK(s.table.find_corpus("bible2/translated"));
    }
    CHECK(error_code([] { split_sublanguages(load_surprisal_table(LANGDIFF_FIXTURES "/fig1.tsv")); }) ==
          Errc::MissingOriginMetadata);
}

TEST_CASE("corpus groups") {
    const auto t = load_surprisal_table(LANGDIFF_FIXTURES "/toy.tsv");
    const auto groups = corpus_groups(t);
    CHECK(groups.size() == 4);
    for (const auto& g : groups) {
        REQUIRE(g.members.size() == 1);
        CHECK(t.corpus_group(g.members[0]) == g.id);
    }
    CHECK(error_code([] {
              table_from("intent_id\tcorpus_id\tsurprisal\tgroup\na\tp\t1\tx\na\tq\t2\ty\nb\tp\t3\tz\nb\tq\t1\ty\n");
          }) == Errc::MalformedRow);
}

TEST_CASE("select_intents keeps order and metadata") {
    const auto t = load_surprisal_table(LANGDIFF_FIXTURES "/toy.tsv");
    const std::vector<std::size_t> keep{1, 4, 7};
    const auto s = select_intents(t, keep);
    CHECK(s.num_intents() == 3);
    CHECK(s.intents()[1] == t.intents()[4]);
    CHECK(s.intent_origin(1) == t.intent_origin(4));
}
