#include <doctest.h>

#include <algorithm>
#include <set>

#include "metalake/errors.hpp"
#include "metalake/util.hpp"

using namespace metalake;

TEST_CASE("rng matches the published splitmix64 reference vectors") {
    Rng r(0);
    CHECK(r.next() == 0xE220A8397B1DCDAFULL);
    CHECK(r.next() == 0x6E789E6AA1B965F4ULL);
    CHECK(r.next() == 0x06C45D188009454FULL);
    Rng r2(1234567);
    Rng r3(1234567);
    for (int i = 0; i < 100; ++i) CHECK(r2.next() == r3.next());
}

TEST_CASE("bounded stays in range and handles degenerate bounds") {
    Rng r(42);
    for (int i = 0; i < 1000; ++i) CHECK(r.bounded(7) < 7);
    CHECK(r.bounded(0) == 0);
    CHECK(r.bounded(1) == 0);
}

TEST_CASE("next_double lands in the unit interval") {
    Rng r(9);
    for (int i = 0; i < 1000; ++i) {
        double d = r.next_double();
        CHECK(d >= 0.0);
        CHECK(d < 1.0);
    }
}

TEST_CASE("sample_indices returns ascending distinct indices") {
    Rng r(5);
    auto s = r.sample_indices(50, 10);
    REQUIRE(s.size() == 10);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::set<size_t>(s.begin(), s.end()).size() == 10);
    for (size_t i : s) CHECK(i < 50);

    auto all = r.sample_indices(5, 99);
    CHECK(all == std::vector<size_t>{0, 1, 2, 3, 4});
    CHECK(r.sample_indices(0, 3).empty());
    CHECK(r.sample_indices(5, 0).empty());
}

TEST_CASE("every index is reachable by sampling") {
    std::set<size_t> seen;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        Rng r(seed);
        for (size_t i : r.sample_indices(10, 3)) seen.insert(i);
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("shuffle permutes without losing elements") {
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    auto original = v;
    Rng r(3);
    r.shuffle(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == original);
}

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
    CHECK(fnv1a64("foobar") == 0x85944171F73967E8ULL);
}

TEST_CASE("derive_seed separates streams by tag and key") {
    uint64_t a = derive_seed(42, "stg_dup", "orders");
    CHECK(a == derive_seed(42, "stg_dup", "orders"));
    CHECK(a != derive_seed(42, "stg_dup", "payments"));
    CHECK(a != derive_seed(42, "test_sample", "orders"));
    CHECK(a != derive_seed(43, "stg_dup", "orders"));
}

TEST_CASE("string helpers") {
    CHECK(to_lower("AbC-12") == "abc-12");
    CHECK(trim("  x y\t\n") == "x y");
    CHECK(trim("") == "");
    CHECK(tokenize("Hello, World-42!") == std::vector<std::string>{"hello", "world", "42"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
    CHECK(join({}, ",") == "");
}

TEST_CASE("sanitize_identifier") {
    CHECK(sanitize_identifier("First Name") == "first_name");
    CHECK(sanitize_identifier("Reports per 100K") == "reports_per_100k");
    CHECK(sanitize_identifier("2024 Report") == "c_2024_report");
    CHECK(sanitize_identifier("") == "col");
    CHECK(sanitize_identifier("ok_name") == "ok_name");
}

TEST_CASE("null and boolean tokens") {
    CHECK(is_null_token(""));
    CHECK(is_null_token("NULL"));
    CHECK(is_null_token("null"));
    CHECK(is_null_token("  Null "));
    CHECK_FALSE(is_null_token("0"));
    CHECK_FALSE(is_null_token("none"));
    CHECK(is_bool_literal("true"));
    CHECK(is_bool_literal("FALSE"));
    CHECK_FALSE(is_bool_literal("1"));
    CHECK_FALSE(is_bool_literal("yes"));
}

TEST_CASE("strict numeric parsing") {
    CHECK(parse_int_strict("42").value() == 42);
    CHECK(parse_int_strict("-7").value() == -7);
    CHECK_FALSE(parse_int_strict("4.2").has_value());
    CHECK_FALSE(parse_int_strict("abc").has_value());
    CHECK_FALSE(parse_int_strict("").has_value());
    CHECK_FALSE(parse_int_strict("12x").has_value());

    CHECK(parse_double_strict("3.75").value() == doctest::Approx(3.75));
    CHECK(parse_double_strict("-0.5").value() == doctest::Approx(-0.5));
    CHECK(parse_double_strict("1e3").value() == doctest::Approx(1000.0));
    CHECK(parse_double_strict(".5").value() == doctest::Approx(0.5));
    CHECK_FALSE(parse_double_strict("1.2.3").has_value());
    CHECK_FALSE(parse_double_strict("5,0").has_value());
    CHECK_FALSE(parse_double_strict("nan").has_value());
    CHECK_FALSE(parse_double_strict("inf").has_value());
    CHECK_FALSE(parse_double_strict("").has_value());
}

TEST_CASE("date literals are strict YYYY-MM-DD") {
    CHECK(is_date_literal("2024-01-31"));
    CHECK(is_date_literal("1999-12-01"));
    CHECK_FALSE(is_date_literal("2024-13-01"));
    CHECK_FALSE(is_date_literal("2024-00-10"));
    CHECK_FALSE(is_date_literal("2024-01-32"));
    CHECK_FALSE(is_date_literal("24-01-01"));
    CHECK_FALSE(is_date_literal("2024/01/01"));
    CHECK_FALSE(is_date_literal("2024-1-1"));
}

TEST_CASE("statistic formatting keeps at most two decimals, at least one") {
    CHECK(format_stat(3.0) == "3.0");
    CHECK(format_stat(3.75) == "3.75");
    CHECK(format_stat(3.5) == "3.5");
    CHECK(format_stat(-0.001) == "0.0");
    CHECK(format_stat(1234.567) == "1234.57");
    CHECK(format_number(5.0, true) == "5");
    CHECK(format_number(5.25, false) == "5.25");
    CHECK(format_ratio(0.5) == "0.5000");
    CHECK(format_ratio(1.0) == "1.0000");
}

TEST_CASE("levenshtein distance") {
    CHECK(levenshtein("kitten", "sitting") == 3);
    CHECK(levenshtein("", "abc") == 3);
    CHECK(levenshtein("same", "same") == 0);
}

TEST_CASE("path_to_table_id flattens separators and drops the extension") {
    CHECK(path_to_table_id("card.csv") == "card");
    CHECK(path_to_table_id("finance/card.csv") == "finance.card");
    CHECK(path_to_table_id("a/b/c.CSV") == "a.b.c");
    CHECK(path_to_table_id("State_Identity_Theft_Reports.csv") ==
          "State_Identity_Theft_Reports");
}
