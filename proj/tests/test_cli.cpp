#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metalake/util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using metalake::read_text_file;
using metalake::write_text_file;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_root() {
    static fs::path root = [] {
        fs::path p = fs::temp_directory_path() /
                     ("metalake_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

CmdResult cli(const std::vector<std::string>& args) {
    static int counter = 0;
    fs::path out_file = work_root() / ("stdout_" + std::to_string(counter));
    fs::path err_file = work_root() / ("stderr_" + std::to_string(counter));
    ++counter;

    std::string cmd = shell_quote(METALAKE_BIN_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(out_file.string()) + " 2>" + shell_quote(err_file.string());

    int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out_file.string());
    r.err = read_text_file(err_file.string());
    return r;
}

fs::path lake() { return work_root() / "lake"; }
bool pipeline_ready = false;

const std::string kLineageTasks =
    "{\"task_id\":\"e1\",\"question\":\"orders for the East region\","
    "\"gold_sql\":\"SELECT * FROM orders WHERE region = 'East'\"}\n"
    "{\"task_id\":\"e2\",\"question\":\"all orders data\","
    "\"gold_sql\":\"SELECT * FROM orders\"}\n"
    "{\"task_id\":\"e3\",\"question\":\"nested\","
    "\"gold_sql\":\"SELECT * FROM (SELECT 1) x\"}\n";

}  // namespace

TEST_CASE("pipeline runs synth, ingest, profile, describe, index in order") {
    std::string clean = (fs::path(FIXTURES_DIR) / "clean_fk").string();

    CmdResult r = cli({"synth", "--in", clean, "--out", lake().string(), "--seed", "42"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "base 1, splits 4, duplicates 15, low quality 20, total 40\n");

    // a second run elsewhere reproduces the manifest byte for byte
    fs::path lake2 = work_root() / "lake2";
    r = cli({"synth", "--in", clean, "--out", lake2.string(), "--json"});
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["total"] == 40);
    CHECK(read_text_file((lake() / ".metalake" / "manifest.json").string()) ==
          read_text_file((lake2 / ".metalake" / "manifest.json").string()));

    r = cli({"ingest", "--lake", lake().string(), "--json"});
    REQUIRE(r.exit_code == 0);
    json ingest = json::parse(r.out);
    CHECK(ingest["tables"] == 40);
    CHECK(ingest["skipped"].empty());

    r = cli({"profile", "--lake", lake().string(), "--verbose"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("profiled 40 tables into ", 0) == 0);
    CHECK(r.err.find("[metalake] profiling orders") != std::string::npos);

    r = cli({"describe", "--lake", lake().string()});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out == "described 40 tables (0 llm, 40 template)\n");

    r = cli({"index", "--lake", lake().string()});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("indexed 40 tables (schema_only, dims 256)") != std::string::npos);
    CHECK(r.out.find("indexed 40 tables (content, dims 256)") != std::string::npos);
    CHECK(r.out.find("indexed 40 tables (discriminative, dims 256)") != std::string::npos);

    pipeline_ready = true;
}

TEST_CASE("baseline search is a deterministic ranked list") {
    REQUIRE(pipeline_ready);
    std::vector<std::string> args = {"search",         "--lake", lake().string(),
                                     "--query",        "orders East region",
                                     "--baseline",     "--k",    "5",
                                     "--max-distance", "1.0"};
    CmdResult first = cli(args);
    REQUIRE(first.exit_code == 0);
    int lines = 0;
    for (char c : first.out) lines += c == '\n';
    CHECK(lines == 5);
    CHECK(first.out.find('\t') != std::string::npos);

    CmdResult second = cli(args);
    CHECK(second.out == first.out);

    args.push_back("--json");
    CmdResult machine = cli(args);
    json rows = json::parse(machine.out);
    REQUIRE(rows["results"].size() == 5);
    CHECK(rows["results"][0].contains("table_id"));
    CHECK(rows["results"][0].contains("distance"));
}

TEST_CASE("session search renders attached metadata unless ablated") {
    REQUIRE(pipeline_ready);
    CmdResult r = cli({"search", "--lake", lake().string(), "--query", "orders East region",
                       "--k", "3", "--max-distance", "0.99"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("Table ID: ") != std::string::npos);
    CHECK(r.out.find("Schema: ") != std::string::npos);

    r = cli({"search", "--lake", lake().string(), "--query", "orders East region", "--k", "3",
             "--max-distance", "0.99", "--no-attached"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("Table ID: ") != std::string::npos);
    CHECK(r.out.find("Schema: ") == std::string::npos);

    r = cli({"search", "--lake", lake().string(), "--query", "orders East region", "--k", "3",
             "--max-distance", "0.99", "--json"});
    json j = json::parse(r.out);
    CHECK_FALSE(j["new_ids"].empty());
    CHECK_FALSE(j["terminated"].get<bool>());
}

TEST_CASE("tool subcommand runs each metadata tool") {
    REQUIRE(pipeline_ready);
    CmdResult r = cli({"tool", "--lake", lake().string(), "--name", "column_profiler",
                       "--table", "orders", "--column", "amount"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("tool: column_profiler\ntable: orders\ncolumn: amount", 0) == 0);

    r = cli({"tool", "--lake", lake().string(), "--name", "data_finder", "--table", "orders",
             "--value", "East", "--json"});
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["tool"] == "data_finder");

    r = cli({"tool", "--lake", lake().string(), "--name", "joinability_check", "--left",
             "orders.customer_id", "--right", "orders_broken_fk.customer_id"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("overlap") != std::string::npos);

    r = cli({"tool", "--lake", lake().string(), "--name", "row_counter"});
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("row_counter") != std::string::npos);

    r = cli({"tool", "--lake", lake().string(), "--name", "column_profiler", "--table",
             "orders"});
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("--column") != std::string::npos);
}

TEST_CASE("select replays a scripted policy to a finalized set") {
    REQUIRE(pipeline_ready);
    fs::path policy = work_root() / "policy.json";
    write_text_file(policy.string(),
                    R"({"actions": ["ACTION search query=\"orders East region\"", )"
                    R"("ACTION finalize tables=[orders_prod, orders_region_east] )"
                    R"(justification=\"prod table plus east partition\""]})");

    CmdResult r = cli({"select", "--lake", lake().string(), "--task", "orders in the east",
                       "--policy", "scripted:" + policy.string()});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out ==
          "tables: orders_prod, orders_region_east\n"
          "justification: prod table plus east partition\n"
          "steps: 2 (FINALIZE)\n");

    fs::path out_file = work_root() / "selection.json";
    r = cli({"select", "--lake", lake().string(), "--task", "orders in the east", "--policy",
             "scripted:" + policy.string(), "--json", "--out", out_file.string()});
    REQUIRE(r.exit_code == 0);
    json sel = json::parse(r.out);
    CHECK(sel["tables"] == json::array({"orders_prod", "orders_region_east"}));
    CHECK(sel["steps"] == 2);
    CHECK(sel["terminated_by"] == "FINALIZE");
    CHECK(json::parse(read_text_file(out_file.string())) == sel);
}

TEST_CASE("reference eval scores a selections file without a lake") {
    fs::path dir = work_root() / "ref_eval";
    fs::create_directories(dir);
    fs::path tasks = dir / "tasks.jsonl";
    write_text_file(tasks.string(),
                    "{\"task_id\":\"r1\",\"question\":\"q1\",\"ref_tables\":[\"ta\",\"tb\"]}\n"
                    "{\"task_id\":\"r2\",\"question\":\"q2\",\"ref_tables\":[\"tc\"]}\n"
                    "{\"task_id\":\"r3\",\"question\":\"q3\"}\n");
    fs::path sel = dir / "selections.json";
    write_text_file(sel.string(),
                    R"([{"task_id":"r1","tables":["ta"],"steps":2},)"
                    R"({"task_id":"r2","tables":["tc","td"],"steps":3}])");

    CmdResult r = cli({"eval", "--lake", dir.string(), "--tasks", tasks.string(), "--mode",
                       "reference", "--selections", sel.string(), "--json"});
    REQUIRE(r.exit_code == 0);
    json summary = json::parse(r.out);
    CHECK(summary["tasks"] == 2);
    CHECK(summary["macro"]["recall"].get<double>() == doctest::Approx(0.75));
    CHECK(summary["macro"]["precision"].get<double>() == doctest::Approx(0.75));
    CHECK(summary["noise_distribution"]["clean"].get<double>() == doctest::Approx(100.0));
    CHECK(summary["skipped"] == json::array({"r3: no ref_tables"}));

    CHECK(read_text_file((dir / ".metalake" / "scores.csv").string()) ==
          "task_id,recall,precision,f1,steps\n"
          "r1,0.5000,1.0000,0.6667,2\n"
          "r2,1.0000,0.5000,0.6667,3\n");

    r = cli({"eval", "--lake", dir.string(), "--tasks", tasks.string(), "--mode", "reference",
             "--selections", sel.string()});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out ==
          "tasks 2  recall 0.7500  precision 0.7500  f1 0.6667  (1 skipped)\n"
          "clean selections: 100.0%\n");
}

TEST_CASE("lineage eval over the baseline matches the golden artifacts") {
    REQUIRE(pipeline_ready);
    fs::path tasks = work_root() / "lineage_tasks.jsonl";
    write_text_file(tasks.string(), kLineageTasks);

    CmdResult r = cli({"eval", "--lake", lake().string(), "--tasks", tasks.string(), "--mode",
                       "lineage", "--k", "5", "--max-distance", "1.0", "--json"});
    REQUIRE(r.exit_code == 0);
    json summary = json::parse(r.out);
    CHECK(summary["tasks"] == 2);
    CHECK(summary["recall_denominator"] == "per_partition");
    CHECK(summary["noise_total_selected"] == 10);  // two tasks, top 5 each
    REQUIRE(summary["skipped"].size() == 1);
    CHECK(std::string(summary["skipped"][0]).rfind("e3: UnsupportedSQL: subquery", 0) == 0);
    CHECK(summary["noise_distribution"].size() == 8);
    double pct = 0;
    for (const auto& [cat, v] : summary["noise_distribution"].items())
        pct += v.get<double>();
    CHECK(pct == doctest::Approx(100.0).epsilon(0.001));

    // frozen snapshots guard the whole pipeline: synth bytes, embeddings,
    // ranking, parsing, and verification all feed these two files
    CHECK(read_text_file((lake() / ".metalake" / "summary.json").string()) ==
          read_text_file((fs::path(GOLDEN_DIR) / "eval_summary.json").string()));
    CHECK(read_text_file((lake() / ".metalake" / "scores.csv").string()) ==
          read_text_file((fs::path(GOLDEN_DIR) / "eval_scores.csv").string()));

    r = cli({"eval", "--lake", lake().string(), "--tasks", tasks.string(), "--mode", "lineage",
             "--k", "5", "--max-distance", "1.0", "--per-base", "--json"});
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["recall_denominator"] == "per_base");
}

TEST_CASE("recall eval writes the per-domain csv") {
    REQUIRE(pipeline_ready);
    fs::path tasks = work_root() / "recall_tasks.jsonl";
    write_text_file(tasks.string(),
                    "{\"task_id\":\"k1\",\"question\":\"orders East region\","
                    "\"ref_tables\":[\"orders_region_east\"],\"domain\":\"sales\"}\n");
    CmdResult r = cli({"eval", "--lake", lake().string(), "--tasks", tasks.string(), "--mode",
                       "recall", "--max-distance", "1.0"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.rfind("domain,tasks,recall_at_1,recall_at_5,recall_at_10\n", 0) == 0);
    CHECK(read_text_file((lake() / ".metalake" / "recall_at_k.csv").string()) == r.out);
}

TEST_CASE("stage prerequisites fail with exit 1 naming the missing command") {
    fs::path fresh = work_root() / "fresh";
    fs::create_directories(fresh);
    write_text_file((fresh / "t.csv").string(), "a,b\n1,2\n");

    CmdResult r = cli({"profile", "--lake", fresh.string()});
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("run 'metalake ingest' first") != std::string::npos);

    REQUIRE(cli({"ingest", "--lake", fresh.string()}).exit_code == 0);
    r = cli({"index", "--lake", fresh.string()});
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("run 'metalake describe' first") != std::string::npos);

    fs::path no_lineage = work_root() / "no_lineage";
    fs::create_directories(no_lineage);
    fs::path tasks = no_lineage / "tasks.jsonl";
    write_text_file(tasks.string(), "{\"task_id\":\"t\",\"question\":\"q\","
                                    "\"gold_sql\":\"SELECT * FROM t\"}\n");
    fs::path sel = no_lineage / "sel.json";
    write_text_file(sel.string(), R"([{"task_id":"t","tables":["t"]}])");
    r = cli({"eval", "--lake", no_lineage.string(), "--tasks", tasks.string(), "--selections",
             sel.string()});
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("run 'metalake synth' first") != std::string::npos);
}

TEST_CASE("usage errors exit 2 before any work") {
    CmdResult r = cli({});
    CHECK(r.exit_code == 2);

    r = cli({"ingest", "--bogus"});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("usage error") != std::string::npos);

    r = cli({"search", "--lake", lake().string()});  // missing required --query
    CHECK(r.exit_code == 2);

    r = cli({"ingest", "--provider", "weird"});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("--provider must be") != std::string::npos);

    r = cli({"ingest", "--provider", "scripted:/does/not/exist.json"});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("provider script not found") != std::string::npos);

    r = cli({"select", "--lake", lake().string(), "--task", "x", "--policy", "llm"});
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("requires --provider") != std::string::npos);
}
