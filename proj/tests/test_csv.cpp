#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "metalake/csv.hpp"
#include "metalake/errors.hpp"

using namespace metalake;

TEST_CASE("plain csv parses into header and rows") {
    CsvTable t = read_csv_text("a,b,c\n1,2,3\n4,5,6\n");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "3"});
    CHECK(t.rows[1] == std::vector<std::string>{"4", "5", "6"});
}

TEST_CASE("quoted fields keep commas, newlines, and escaped quotes") {
    CsvTable t = read_csv_text("name,note\n\"Smith, Jo\",\"said \"\"hi\"\"\"\nplain,\"a\nb\"\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "Smith, Jo");
    CHECK(t.rows[0][1] == "said \"hi\"");
    CHECK(t.rows[1][1] == "a\nb");
}

TEST_CASE("crlf and lone cr records both terminate rows") {
    CsvTable t = read_csv_text("a,b\r\n1,2\r\n3,4\r");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1] == std::vector<std::string>{"3", "4"});
}

TEST_CASE("bom is stripped and blank lines are skipped") {
    CsvTable t = read_csv_text("\xEF\xBB\xBFx,y\n\n1,2\n\n");
    CHECK(t.header == std::vector<std::string>{"x", "y"});
    REQUIRE(t.rows.size() == 1);
}

TEST_CASE("ragged rows are resized to the header width") {
    CsvTable t = read_csv_text("a,b,c\n1,2\n1,2,3,4\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"1", "2", ""});
    CHECK(t.rows[1] == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("empty input has no header row") {
    CHECK_THROWS_AS(read_csv_text(""), UnreadableFile);
    CHECK_THROWS_AS(read_csv_text("\n\n"), UnreadableFile);
}

TEST_CASE("header-only input yields zero rows") {
    CsvTable t = read_csv_text("a,b\n");
    CHECK(t.rows.empty());
}

TEST_CASE("write quotes only fields that need it") {
    CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"plain", "with,comma"}, {"with\"quote", "with\nnewline"}};
    std::string text = write_csv_text(t);
    CHECK(text == "a,b\nplain,\"with,comma\"\n\"with\"\"quote\",\"with\nnewline\"\n");
    CsvTable back = read_csv_text(text);
    CHECK(back == t);
}

TEST_CASE("file round trip") {
    auto dir = std::filesystem::temp_directory_path() / "metalake_csv_test";
    std::filesystem::create_directories(dir);
    CsvTable t;
    t.header = {"k", "v"};
    t.rows = {{"1", "x"}, {"2", ""}};
    write_csv_file(dir / "t.csv", t);
    CHECK(read_csv_file(dir / "t.csv") == t);
    CHECK_THROWS_AS(read_csv_file(dir / "missing.csv"), UnreadableFile);
    std::filesystem::remove_all(dir);
}
