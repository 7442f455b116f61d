#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metalake/providers.hpp"
#include "metalake/search.hpp"
#include "metalake/synthlake.hpp"

namespace metalake {

struct Scores {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;

    bool operator==(const Scores&) const = default;
};

struct ValueConstraint {
    std::optional<std::string> table;  // absent when the qualifier is ambiguous
    std::string column;
    std::string value;  // unquoted, case preserved

    bool operator==(const ValueConstraint&) const = default;
};

struct GoldQuerySpec {
    std::string question;
    std::string gold_sql;
    std::vector<std::string> base_tables;  // deduplicated, first-seen order
    std::vector<ValueConstraint> value_constraints;
};

struct TableVerdict {
    std::string table_id;
    bool correct = false;
    std::string reason;  // "ok" or why the table was rejected
};

enum class RecallDenominator { PER_PARTITION, PER_BASE };
std::string recall_denominator_name(RecallDenominator d);

struct VerifyResult {
    std::vector<TableVerdict> verdicts;
    Scores scores;
    int64_t required_units = 0;
    RecallDenominator denominator = RecallDenominator::PER_PARTITION;
};

struct EvalTask {
    std::string task_id;
    std::string question;
    std::string domain = "all";
    std::optional<std::string> gold_sql;
    std::optional<std::vector<std::string>> ref_tables;
};

struct ScoreRow {
    std::string task_id;
    Scores scores;
    int steps = 0;
    std::vector<TableVerdict> verdicts;
};

struct NoiseDistribution {
    std::map<std::string, int64_t> counts;       // all categories present
    std::map<std::string, double> percentages;   // sum 100 when total > 0
    int64_t total = 0;
};

struct SelectionSample {
    std::vector<std::string> tables;
    const GoldQuerySpec* spec = nullptr;  // enables partition-mismatch classification
};

struct RecallAtKRow {
    std::string domain;
    int64_t tasks = 0;
    std::vector<double> recall_pct;  // aligned with the ks argument
};

Scores score_against_reference(const std::vector<std::string>& ref,
                               const std::vector<std::string>& pred);  // EmptyReference

GoldQuerySpec parse_gold_sql(const std::string& sql);  // UnsupportedSQL outside the subset

// Clean base ancestor of a derived id; ids absent from the store are bases.
std::string resolve_base(const LineageStore& lineage, const std::string& table_id);
std::vector<const LineageRecord*> resolve_chain(const LineageStore& lineage,
                                                const std::string& table_id);

VerifyResult verify_selection(const std::vector<std::string>& pred, const GoldQuerySpec& spec,
                              const LineageStore& lineage,
                              RecallDenominator denominator = RecallDenominator::PER_PARTITION);

NoiseDistribution noise_distribution(const std::vector<SelectionSample>& samples,
                                     const LineageStore& lineage);

std::vector<RecallAtKRow> recall_at_k(const std::vector<EvalTask>& tasks, const VectorIndex& index,
                                      EmbeddingProvider& embedder,
                                      const std::vector<int>& ks = {1, 5, 10},
                                      double max_distance = 0.7);

std::vector<EvalTask> load_tasks(const std::filesystem::path& path);

std::string render_scores_csv(const std::vector<ScoreRow>& rows);
std::string render_recall_csv(const std::vector<RecallAtKRow>& rows, const std::vector<int>& ks);
std::string eval_summary_json(const std::vector<ScoreRow>& rows, const NoiseDistribution& noise,
                              const std::string& denominator_name,
                              const std::vector<std::string>& skipped);

}  // namespace metalake
