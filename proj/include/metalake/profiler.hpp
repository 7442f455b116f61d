#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metalake/catalog.hpp"

namespace metalake {

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<int64_t> counts;  // 10 equal-width bins, or 1 when lo == hi

    bool operator==(const Histogram&) const = default;
};

struct ColumnProfile {
    std::string column;
    std::optional<std::string> min_text;  // canonical value, lexicographic for non-numeric
    std::optional<std::string> max_text;
    std::optional<double> min_num;  // numeric columns only
    std::optional<double> max_num;
    std::optional<double> mean;
    std::optional<double> median;
    double null_ratio = 0.0;
    int64_t distinct_count = 0;
    std::vector<std::pair<std::string, int64_t>> top_k;  // freq desc, value asc on ties
    std::optional<Histogram> histogram;

    bool operator==(const ColumnProfile&) const = default;
};

struct TableProfile {
    std::string table_id;
    int64_t row_count = 0;
    std::vector<ColumnProfile> columns;

    const ColumnProfile& get(const std::string& column) const;  // throws UnknownColumn
    bool operator==(const TableProfile&) const = default;
};

struct ProfileOptions {
    int top_k = 10;
};

// Canonical cell rendering used for distinct/top-k keys: numeric cells are
// re-rendered from their parsed value so "3.00" and "3.0" collapse.
std::string canonical_value(ColumnType t, const std::string& cell);

TableProfile profile_table(const CatalogStore& c, const TableEntry& entry,
                           const ProfileOptions& options = {});

Histogram column_histogram(const CatalogStore& c, const TableEntry& entry,
                           const std::string& column);

void save_profiles(const std::vector<TableProfile>& profiles, const std::filesystem::path& path);
std::vector<TableProfile> load_profiles(const std::filesystem::path& path);
std::filesystem::path profiles_path(const std::filesystem::path& lake_root);

std::string profile_to_json_line(const TableProfile& p);

}  // namespace metalake
