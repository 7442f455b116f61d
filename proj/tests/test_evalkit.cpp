#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/evalkit.hpp"
#include "metalake/providers.hpp"
#include "metalake/search.hpp"
#include "metalake/util.hpp"

using namespace metalake;
namespace fs = std::filesystem;

namespace {

LineageRecord rec(const std::string& derived, const std::string& base, const std::string& op,
                  std::map<std::string, std::string> params = {}) {
    LineageRecord r;
    r.derived_table_id = derived;
    r.base_table_id = base;
    r.operation = op;
    r.params = std::move(params);
    return r;
}

// clean district partitions on A3 plus the usual noise variants
LineageStore district_lineage() {
    LineageStore s;
    s["district_prod"] = rec("district_prod", "district", "PROD");
    s["district_stg"] = rec("district_stg", "district", "STG_DUPROWS");
    s["district_subset"] = rec("district_subset", "district", "SUBSET");
    s["district_A3_east_bohemia"] = rec("district_A3_east_bohemia", "district", "PARTITION",
                                        {{"column", "A3"}, {"value", "East Bohemia"}});
    s["district_A3_east_bohemia_prod"] =
        rec("district_A3_east_bohemia_prod", "district_A3_east_bohemia", "PROD");
    s["district_A3_prague"] = rec("district_A3_prague", "district", "PARTITION",
                                  {{"column", "A3"}, {"value", "Prague"}});
    s["district_A3_prague_prod"] = rec("district_A3_prague_prod", "district_A3_prague", "PROD");
    s["other_prod"] = rec("other_prod", "other", "PROD");
    return s;
}

const TableVerdict& verdict_for(const VerifyResult& r, const std::string& id) {
    for (const auto& v : r.verdicts) {
        if (v.table_id == id) return v;
    }
    throw std::logic_error("no verdict for " + id);
}

}  // namespace

TEST_CASE("reference scoring matches the set formulas") {
    CHECK(score_against_reference({"A", "B"}, {"A", "B"}) == Scores{1.0, 1.0, 1.0});
    CHECK(score_against_reference({"A", "B"}, {"A", "C"}) == Scores{0.5, 0.5, 0.5});
    CHECK(score_against_reference({"A", "B"}, {}) == Scores{0.0, 0.0, 0.0});

    Scores s = score_against_reference({"A", "B"}, {"A", "C", "D"});
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(s.precision == doctest::Approx(1.0 / 3.0));
    CHECK(s.f1 == doctest::Approx(0.4));

    // inputs are treated as sets: repeats change nothing
    CHECK(score_against_reference({"A", "B", "A"}, {"A", "A", "A"}) ==
          score_against_reference({"A", "B"}, {"A"}));
    CHECK_THROWS_AS(score_against_reference({}, {"A"}), EmptyReference);
}

TEST_CASE("reference scoring agrees with a brute-force oracle") {
    Rng rng(derive_seed(42, "test", "score_oracle"));
    for (int trial = 0; trial < 200; ++trial) {
        std::set<std::string> ref, pred;
        size_t nref = 1 + rng.bounded(8);
        while (ref.size() < nref) ref.insert("t" + std::to_string(rng.bounded(16)));
        size_t npred = rng.bounded(9);
        while (pred.size() < npred) pred.insert("t" + std::to_string(rng.bounded(16)));

        std::vector<std::string> inter;
        std::set_intersection(ref.begin(), ref.end(), pred.begin(), pred.end(),
                              std::back_inserter(inter));
        double r = static_cast<double>(inter.size()) / static_cast<double>(ref.size());
        double p = pred.empty() ? 0.0
                                : static_cast<double>(inter.size()) /
                                      static_cast<double>(pred.size());
        double f = (r + p) > 0 ? 2 * r * p / (r + p) : 0.0;

        Scores s = score_against_reference({ref.begin(), ref.end()}, {pred.begin(), pred.end()});
        CHECK(s.recall == doctest::Approx(r));
        CHECK(s.precision == doctest::Approx(p));
        CHECK(s.f1 == doctest::Approx(f));
    }
}

TEST_CASE("gold sql parsing covers the supported subset") {
    GoldQuerySpec spec = parse_gold_sql("SELECT * FROM district WHERE A3 = 'East Bohemia'");
    CHECK(spec.gold_sql == "SELECT * FROM district WHERE A3 = 'East Bohemia'");
    CHECK(spec.base_tables == std::vector<std::string>{"district"});
    REQUIRE(spec.value_constraints.size() == 1);
    CHECK(spec.value_constraints[0].table.value() == "district");
    CHECK(spec.value_constraints[0].column == "A3");
    CHECK(spec.value_constraints[0].value == "East Bohemia");

    SUBCASE("join harvesting and alias resolution") {
        spec = parse_gold_sql(
            "SELECT a.x FROM district a JOIN pop AS b ON a.id = b.id "
            "WHERE a.A3 = 'X' AND b.State = 'Georgia'");
        CHECK(spec.base_tables == std::vector<std::string>{"district", "pop"});
        REQUIRE(spec.value_constraints.size() == 2);
        CHECK(spec.value_constraints[0].table.value() == "district");
        CHECK(spec.value_constraints[0].column == "A3");
        CHECK(spec.value_constraints[1].table.value() == "pop");
        CHECK(spec.value_constraints[1].value == "Georgia");
    }
    SUBCASE("bare join keeps both tables and no constraints") {
        spec = parse_gold_sql("SELECT a.x FROM t1 a JOIN t2 b ON a.k=b.k");
        CHECK(spec.base_tables == std::vector<std::string>{"t1", "t2"});
        CHECK(spec.value_constraints.empty());
    }
    SUBCASE("non-equality predicates are ignored") {
        spec = parse_gold_sql("SELECT * FROM t WHERE x > 5");
        CHECK(spec.base_tables == std::vector<std::string>{"t"});
        CHECK(spec.value_constraints.empty());
    }
    SUBCASE("IN lists expand to one constraint per value") {
        spec = parse_gold_sql("SELECT * FROM card WHERE card_type IN ('gold', 'classic')");
        REQUIRE(spec.value_constraints.size() == 2);
        CHECK(spec.value_constraints[0].value == "gold");
        CHECK(spec.value_constraints[1].value == "classic");
        CHECK(spec.value_constraints[0].table.value() == "card");
    }
    SUBCASE("unqualified columns stay ambiguous with several tables") {
        spec = parse_gold_sql("SELECT * FROM t1, t2 WHERE region = 'East'");
        CHECK(spec.base_tables == std::vector<std::string>{"t1", "t2"});
        REQUIRE(spec.value_constraints.size() == 1);
        CHECK_FALSE(spec.value_constraints[0].table.has_value());
    }
    SUBCASE("literal-first equality, numbers, and escaped quotes") {
        spec = parse_gold_sql("SELECT * FROM t WHERE 2024 = year AND name = 'O''Brien'");
        REQUIRE(spec.value_constraints.size() == 2);
        CHECK(spec.value_constraints[0].column == "year");
        CHECK(spec.value_constraints[0].value == "2024");
        CHECK(spec.value_constraints[1].value == "O'Brien");
    }
    SUBCASE("double quotes, parentheses, and trailing clauses") {
        spec = parse_gold_sql(
            "SELECT region FROM t WHERE (A3 = \"East Bohemia\") "
            "GROUP BY region ORDER BY region LIMIT 5");
        REQUIRE(spec.value_constraints.size() == 1);
        CHECK(spec.value_constraints[0].value == "East Bohemia");
    }
    SUBCASE("OR disjunctions contribute no constraints") {
        spec = parse_gold_sql("SELECT * FROM t WHERE a = 1 OR b = 2");
        CHECK(spec.value_constraints.empty());
    }
    SUBCASE("dotted names and duplicate refs") {
        spec = parse_gold_sql("SELECT * FROM sales.orders o JOIN sales.orders p ON o.id=p.id");
        CHECK(spec.base_tables == std::vector<std::string>{"sales.orders"});
    }
}

TEST_CASE("gold sql rejection names the offending span") {
    CHECK_THROWS_WITH_AS(parse_gold_sql("SELECT * FROM (SELECT x FROM t)"),
                         "UnsupportedSQL: subquery at offset 14: \"(SELECT x FROM t)\"", UnsupportedSQL);
    CHECK_THROWS_WITH_AS(parse_gold_sql("SELECT a FROM t UNION SELECT b FROM u"),
                         "UnsupportedSQL: set operation at offset 16: \"UNION SELECT b FROM u\"", UnsupportedSQL);
    CHECK_THROWS_WITH_AS(parse_gold_sql("DELETE FROM t"),
                         "UnsupportedSQL: expected SELECT at offset 0: \"DELETE FROM t\"", UnsupportedSQL);
    CHECK_THROWS_WITH_AS(parse_gold_sql("SELECT x"),
                         "UnsupportedSQL: missing FROM clause at offset 8: \"\"", UnsupportedSQL);
    CHECK_THROWS_WITH_AS(parse_gold_sql("SELECT * FROM t WHERE name = 'unterminated"),
                         "UnsupportedSQL: unterminated string literal at offset 29", UnsupportedSQL);
    CHECK_THROWS_AS(parse_gold_sql("SELECT * FROM WHERE x = 1"), UnsupportedSQL);
    CHECK_THROWS_AS(parse_gold_sql(""), UnsupportedSQL);
}

TEST_CASE("lineage chains resolve to the clean base") {
    LineageStore s;
    s["a"] = rec("a", "b", "SUBSET");
    s["b"] = rec("b", "c", "PROD");
    CHECK(resolve_base(s, "a") == "c");
    CHECK(resolve_chain(s, "a").size() == 2);
    CHECK(resolve_base(s, "zzz") == "zzz");
    CHECK(resolve_chain(s, "zzz").empty());

    s["x"] = rec("x", "y", "PROD");
    s["y"] = rec("y", "x", "PROD");
    CHECK_THROWS_AS(resolve_chain(s, "x"), UnknownLineage);
    s["p"] = rec("p", "", "PROD");
    CHECK_THROWS_AS(resolve_chain(s, "p"), UnknownLineage);
}

TEST_CASE("verification accepts the matching-partition worked example") {
    LineageStore lineage = district_lineage();
    GoldQuerySpec spec = parse_gold_sql("SELECT * FROM district WHERE A3 = 'East Bohemia'");

    VerifyResult r = verify_selection({"district_A3_east_bohemia_prod"}, spec, lineage);
    REQUIRE(r.verdicts.size() == 1);
    CHECK(r.verdicts[0].correct);
    CHECK(r.verdicts[0].reason == "ok");
    CHECK(r.required_units == 1);
    CHECK(r.scores == Scores{1.0, 1.0, 1.0});
    CHECK(r.denominator == RecallDenominator::PER_PARTITION);
}

TEST_CASE("each verification condition flips a verdict on its own") {
    LineageStore lineage = district_lineage();
    GoldQuerySpec spec = parse_gold_sql("SELECT * FROM district WHERE A3 = 'East Bohemia'");

    SUBCASE("condition 1: base table outside the query") {
        VerifyResult r = verify_selection({"other_prod"}, spec, lineage);
        CHECK_FALSE(r.verdicts[0].correct);
        CHECK(r.verdicts[0].reason == "base table 'other' is not required by the query");
        CHECK(r.scores == Scores{0.0, 0.0, 0.0});
    }
    SUBCASE("condition 2: noise operation in the chain") {
        VerifyResult r = verify_selection({"district_subset"}, spec, lineage);
        CHECK_FALSE(r.verdicts[0].correct);
        CHECK(r.verdicts[0].reason == "noise operation SUBSET in lineage");
        r = verify_selection({"district_stg"}, spec, lineage);
        CHECK(r.verdicts[0].reason == "noise operation STG_DUPROWS in lineage");
    }
    SUBCASE("condition 3: partition value off the filter") {
        VerifyResult r = verify_selection({"district_A3_prague_prod"}, spec, lineage);
        CHECK_FALSE(r.verdicts[0].correct);
        CHECK(r.verdicts[0].reason ==
              "partition A3=Prague does not match the filter constraints");
    }
    SUBCASE("a clean unpartitioned variant stays correct under a filter") {
        VerifyResult r = verify_selection({"district_prod"}, spec, lineage);
        CHECK(r.verdicts[0].correct);
        CHECK(r.scores.recall == doctest::Approx(1.0));
    }
    SUBCASE("mixed selections blend precision and recall") {
        VerifyResult r =
            verify_selection({"district_A3_east_bohemia_prod", "district_stg"}, spec, lineage);
        CHECK(verdict_for(r, "district_A3_east_bohemia_prod").correct);
        CHECK_FALSE(verdict_for(r, "district_stg").correct);
        CHECK(r.scores.recall == doctest::Approx(1.0));
        CHECK(r.scores.precision == doctest::Approx(0.5));
        CHECK(r.scores.f1 == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("empty specs are rejected") {
        CHECK_THROWS_AS(verify_selection({"district_prod"}, GoldQuerySpec{}, lineage),
                        EmptyReference);
    }
}

TEST_CASE("recall denominators diverge on half-covered partition sets") {
    LineageStore lineage;
    lineage["card_card_type_gold"] = rec("card_card_type_gold", "card", "PARTITION",
                                         {{"column", "card_type"}, {"value", "gold"}});
    lineage["card_card_type_classic"] = rec("card_card_type_classic", "card", "PARTITION",
                                            {{"column", "card_type"}, {"value", "classic"}});
    GoldQuerySpec spec =
        parse_gold_sql("SELECT * FROM card WHERE card_type IN ('gold', 'classic')");

    VerifyResult per_partition = verify_selection({"card_card_type_gold"}, spec, lineage,
                                                  RecallDenominator::PER_PARTITION);
    CHECK(per_partition.verdicts[0].correct);
    CHECK(per_partition.required_units == 2);
    CHECK(per_partition.scores.recall == doctest::Approx(0.5));
    CHECK(per_partition.scores.precision == doctest::Approx(1.0));

    VerifyResult per_base = verify_selection({"card_card_type_gold"}, spec, lineage,
                                             RecallDenominator::PER_BASE);
    CHECK(per_base.required_units == 1);
    CHECK(per_base.scores.recall == doctest::Approx(1.0));

    VerifyResult both = verify_selection({"card_card_type_gold", "card_card_type_classic"}, spec,
                                         lineage, RecallDenominator::PER_PARTITION);
    CHECK(both.scores.recall == doctest::Approx(1.0));
    CHECK(recall_denominator_name(RecallDenominator::PER_PARTITION) == "per_partition");
    CHECK(recall_denominator_name(RecallDenominator::PER_BASE) == "per_base");
}

TEST_CASE("noise distribution classifies chains and sums to 100") {
    LineageStore lineage = district_lineage();
    GoldQuerySpec spec = parse_gold_sql("SELECT * FROM district WHERE A3 = 'East Bohemia'");
    std::vector<SelectionSample> samples = {
        {{"district_prod", "district_stg", "district_A3_prague_prod", "district_subset"}, &spec},
        {{"district_A3_prague_prod"}, nullptr},  // no spec, so no mismatch check
    };
    NoiseDistribution dist = noise_distribution(samples, lineage);
    CHECK(dist.total == 5);
    CHECK(dist.counts.at("clean") == 2);
    CHECK(dist.counts.at("stg") == 1);
    CHECK(dist.counts.at("subset") == 1);
    CHECK(dist.counts.at("partition_mismatch") == 1);
    CHECK(dist.counts.at("dups") == 0);
    CHECK(dist.counts.at("test") == 0);
    CHECK(dist.counts.at("broken_fk") == 0);
    CHECK(dist.counts.at("nulls") == 0);
    CHECK(dist.counts.size() == 8);

    double sum = 0;
    for (const auto& [cat, pct] : dist.percentages) sum += pct;
    CHECK(sum == doctest::Approx(100.0).epsilon(0.001));
    CHECK(dist.percentages.at("clean") == doctest::Approx(40.0));

    NoiseDistribution empty = noise_distribution({}, lineage);
    CHECK(empty.total == 0);
    CHECK(empty.percentages.at("clean") == 0.0);
}

TEST_CASE("recall_at_k averages per domain over the baseline ranking") {
    LocalHashEmbedder emb;
    VectorIndex index;
    index.kind = IndexKind::DISCRIMINATIVE;
    index.dims = emb.dims();
    for (const auto& [id, text] : std::vector<std::pair<std::string, std::string>>{
             {"t_alpha", "alpha alpha"}, {"t_beta", "beta beta"}, {"t_gamma", "gamma gamma"}}) {
        index.entries.push_back({id, emb.embed(text)});
    }

    std::vector<EvalTask> tasks;
    tasks.push_back({"q1", "alpha", "geo", std::nullopt, std::vector<std::string>{"t_alpha"}});
    tasks.push_back({"q2", "beta", "geo", std::nullopt, std::vector<std::string>{"t_beta"}});
    tasks.push_back({"q3", "alpha beta", "fin", std::nullopt,
                     std::vector<std::string>{"t_alpha", "t_beta"}});
    tasks.push_back({"skip", "gamma", "fin", std::nullopt, std::nullopt});  // no reference

    auto rows = recall_at_k(tasks, index, emb, {1, 2}, 0.95);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].domain == "fin");
    CHECK(rows[0].tasks == 1);
    CHECK(rows[0].recall_pct[0] == doctest::Approx(50.0));  // tie at k=1 keeps one of two refs
    CHECK(rows[0].recall_pct[1] == doctest::Approx(100.0));
    CHECK(rows[1].domain == "geo");
    CHECK(rows[1].tasks == 2);
    CHECK(rows[1].recall_pct[0] == doctest::Approx(100.0));
    CHECK(rows[2].domain == "overall");
    CHECK(rows[2].tasks == 3);
    CHECK(rows[2].recall_pct[0] == doctest::Approx(250.0 / 3.0));

    // a single domain collapses to one row without the overall duplicate
    auto solo = recall_at_k({tasks[0], tasks[1]}, index, emb, {1}, 0.95);
    REQUIRE(solo.size() == 1);
    CHECK(solo[0].domain == "geo");

    std::string csv = render_recall_csv(rows, {1, 2});
    CHECK(csv ==
          "domain,tasks,recall_at_1,recall_at_2\n"
          "fin,1,50.0,100.0\n"
          "geo,2,100.0,100.0\n"
          "overall,3,83.3,100.0\n");
}

TEST_CASE("task files load as jsonl with defaults") {
    fs::path dir = fs::temp_directory_path() /
                   ("metalake_eval_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    fs::path path = dir / "tasks.jsonl";
    write_text_file(path,
                    "{\"task_id\":\"t1\",\"question\":\"which tables\",\"domain\":\"geo\","
                    "\"gold_sql\":\"SELECT * FROM d\",\"ref_tables\":[\"d\"]}\n"
                    "\n"
                    "{\"task_id\":\"t2\",\"question\":\"other\"}\n");
    auto tasks = load_tasks(path);
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].task_id == "t1");
    CHECK(tasks[0].domain == "geo");
    CHECK(tasks[0].gold_sql.value() == "SELECT * FROM d");
    CHECK(tasks[0].ref_tables.value() == std::vector<std::string>{"d"});
    CHECK(tasks[1].domain == "all");
    CHECK_FALSE(tasks[1].gold_sql.has_value());
    CHECK_FALSE(tasks[1].ref_tables.has_value());

    write_text_file(path, "{\"task_id\":\"t1\",\"question\":\"q\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(load_tasks(path),
                         ("BadArgs: bad task record at " + path.string() + ":2").c_str(), BadArgs);
    fs::remove_all(dir);
}

TEST_CASE("score csv and summary json carry the pinned shapes") {
    std::vector<ScoreRow> rows;
    rows.push_back({"t1", {0.5, 1.0 / 3.0, 0.4}, 3, {}});
    rows.push_back({"t2", {1.0, 1.0, 1.0}, 2, {}});
    CHECK(render_scores_csv(rows) ==
          "task_id,recall,precision,f1,steps\n"
          "t1,0.5000,0.3333,0.4000,3\n"
          "t2,1.0000,1.0000,1.0000,2\n");

    NoiseDistribution noise = noise_distribution(
        {{{"district_prod"}, nullptr}}, district_lineage());
    std::string summary = eval_summary_json(rows, noise, "per_partition", {"t9"});
    auto j = nlohmann::json::parse(summary);
    CHECK(j["tasks"] == 2);
    CHECK(j["macro"]["recall"].get<double>() == doctest::Approx(0.75));
    CHECK(j["macro"]["f1"].get<double>() == doctest::Approx(0.7));
    CHECK(j["noise_distribution"].size() == 8);
    CHECK(j["noise_distribution"]["clean"].get<double>() == doctest::Approx(100.0));
    CHECK(j["noise_total_selected"] == 1);
    CHECK(j["recall_denominator"] == "per_partition");
    CHECK(j["skipped"] == nlohmann::json::array({"t9"}));
    CHECK(summary.back() == '\n');
}
