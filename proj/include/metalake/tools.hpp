#pragma once

#include <map>
#include <optional>
#include <string>

#include "metalake/catalog.hpp"
#include "metalake/profiler.hpp"

namespace metalake {

struct ProfileReport {
    std::string table_id;
    std::string column;
    ColumnType type = ColumnType::STRING;
    ColumnProfile profile;
};

struct FindReport {
    std::string table_id;
    std::optional<std::string> column;  // absent = all columns searched
    std::string value;
    bool found = false;
    std::vector<std::string> matching_columns;      // schema order
    std::map<std::string, int64_t> match_count;     // per searched column
};

struct JoinabilityReport {
    std::string left_table, left_column;
    std::string right_table, right_column;
    int64_t overlap_count = 0;
    int64_t distinct_left = 0;
    int64_t distinct_right = 0;
    double containment_lr = 0.0;
    double containment_rl = 0.0;
    double jaccard = 0.0;
    double null_ref_ratio_lr = 0.0;  // non-null left rows absent from right
    bool type_mismatch = false;      // fell back to raw string comparison
};

// Accepts the raw header spelling as well as the sanitized name.
const ColumnSpec& resolve_column(const TableEntry& entry, const std::string& column);

// Uncapped exact profile of one column.
ProfileReport column_profiler(const CatalogStore& c, const std::string& table_id,
                              const std::string& column);

// Value presence with trim / STRING case-folding / numeric-equality matching.
FindReport data_finder(const CatalogStore& c, const std::string& table_id,
                       const std::string& value,
                       const std::optional<std::string>& column = std::nullopt);

JoinabilityReport joinability_check(const CatalogStore& c, const std::string& left_table,
                                    const std::string& left_column,
                                    const std::string& right_table,
                                    const std::string& right_column);

// Compact fixed-key text blocks for the agent context (<= 20 lines each).
std::string render_report(const ProfileReport& r);
std::string render_report(const FindReport& r);
std::string render_report(const JoinabilityReport& r);

std::string report_json(const ProfileReport& r);
std::string report_json(const FindReport& r);
std::string report_json(const JoinabilityReport& r);

}  // namespace metalake
