#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace metalake {

enum class ColumnType { BOOLEAN, INTEGER, FLOAT, DATE, STRING };

std::string column_type_name(ColumnType t);
std::optional<ColumnType> column_type_from_name(const std::string& s);
bool is_numeric_type(ColumnType t);

struct ColumnSpec {
    std::string name;  // sanitized
    ColumnType declared_type = ColumnType::STRING;
    bool nullable = false;

    bool operator==(const ColumnSpec&) const = default;
};

struct TableEntry {
    std::string table_id;
    std::string name;         // file stem
    std::string source_path;  // relative to lake root
    std::vector<ColumnSpec> columns;
    int64_t row_count = 0;
    std::optional<std::string> user_description;
    std::optional<std::string> lineage_id;

    bool operator==(const TableEntry&) const = default;
};

struct CatalogStore {
    std::string lake_root;
    std::map<std::string, TableEntry> entries;  // table_id -> entry

    const TableEntry& get(const std::string& table_id) const;  // throws UnknownTable
    bool operator==(const CatalogStore&) const = default;
};

struct IngestOptions {
    // Rows examined per column for type inference; <=0 means unlimited.
    int64_t inference_row_cap = 100000;
};

struct IngestReport {
    size_t ingested = 0;
    std::vector<std::pair<std::string, std::string>> skipped;  // (path, reason)
};

// Narrowest type in BOOLEAN < INTEGER < FLOAT < DATE < STRING that parses
// every non-null cell. All-null columns fall back to STRING, nullable.
std::vector<ColumnSpec> infer_schema(const std::vector<std::string>& raw_names,
                                     const std::vector<std::vector<std::string>>& rows,
                                     int64_t row_cap = 0);

CatalogStore ingest_lake(const std::filesystem::path& root_dir,
                         const IngestOptions& options = {},
                         IngestReport* report = nullptr);

void save_catalog(const CatalogStore& c, const std::filesystem::path& path);
CatalogStore load_catalog(const std::filesystem::path& path);

// <lake>/.metalake/<leaf> path helpers used by every pipeline stage.
std::filesystem::path metalake_dir(const std::filesystem::path& lake_root);
std::filesystem::path catalog_path(const std::filesystem::path& lake_root);

// Absolute path of the CSV backing an entry.
std::filesystem::path table_file(const CatalogStore& c, const TableEntry& e);

}  // namespace metalake
