#include "metalake/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "metalake/csv.hpp"
#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

std::string column_type_name(ColumnType t) {
    switch (t) {
        case ColumnType::BOOLEAN: return "BOOLEAN";
        case ColumnType::INTEGER: return "INTEGER";
        case ColumnType::FLOAT: return "FLOAT";
        case ColumnType::DATE: return "DATE";
        case ColumnType::STRING: return "STRING";
    }
    return "STRING";
}

std::optional<ColumnType> column_type_from_name(const std::string& s) {
    if (s == "BOOLEAN") return ColumnType::BOOLEAN;
    if (s == "INTEGER") return ColumnType::INTEGER;
    if (s == "FLOAT") return ColumnType::FLOAT;
    if (s == "DATE") return ColumnType::DATE;
    if (s == "STRING") return ColumnType::STRING;
    return std::nullopt;
}

bool is_numeric_type(ColumnType t) {
    return t == ColumnType::INTEGER || t == ColumnType::FLOAT;
}

const TableEntry& CatalogStore::get(const std::string& table_id) const {
    auto it = entries.find(table_id);
    if (it == entries.end()) throw UnknownTable(table_id);
    return it->second;
}

namespace {

bool cell_parses_as(ColumnType t, const std::string& cell) {
    switch (t) {
        case ColumnType::BOOLEAN: return is_bool_literal(cell);
        case ColumnType::INTEGER: return parse_int_strict(cell).has_value();
        case ColumnType::FLOAT: return parse_double_strict(cell).has_value();
        case ColumnType::DATE: return is_date_literal(cell);
        case ColumnType::STRING: return true;
    }
    return true;
}

std::vector<std::string> dedupe_names(std::vector<std::string> names) {
    std::set<std::string> taken;
    for (auto& n : names) {
        if (!taken.count(n)) {
            taken.insert(n);
            continue;
        }
        int suffix = 2;
        std::string candidate;
        do {
            candidate = n + "_" + std::to_string(suffix++);
        } while (taken.count(candidate));
        n = candidate;
        taken.insert(n);
    }
    return names;
}

}  // namespace

std::vector<ColumnSpec> infer_schema(const std::vector<std::string>& raw_names,
                                     const std::vector<std::vector<std::string>>& rows,
                                     int64_t row_cap) {
    std::vector<std::string> names;
    names.reserve(raw_names.size());
    for (const auto& raw : raw_names) names.push_back(sanitize_identifier(raw));
    names = dedupe_names(std::move(names));

    static const ColumnType ladder[] = {ColumnType::BOOLEAN, ColumnType::INTEGER,
                                        ColumnType::FLOAT, ColumnType::DATE,
                                        ColumnType::STRING};
    std::vector<ColumnSpec> specs(names.size());
    size_t limit = rows.size();
    if (row_cap > 0 && static_cast<size_t>(row_cap) < limit) limit = static_cast<size_t>(row_cap);

    for (size_t c = 0; c < names.size(); ++c) {
        // Acceptance is not monotone along the ladder ("true" is BOOLEAN but
        // not INTEGER), so track validity per type instead of a rising rung.
        bool valid[5] = {true, true, true, true, true};
        bool nullable = false;
        bool saw_value = false;
        for (size_t r = 0; r < limit; ++r) {
            const std::string& cell = rows[r][c];
            if (is_null_token(cell)) {
                nullable = true;
                continue;
            }
            saw_value = true;
            for (size_t t = 0; t < 4; ++t) {
                if (valid[t]) valid[t] = cell_parses_as(ladder[t], cell);
            }
        }
        size_t rung = 0;
        while (!valid[rung]) ++rung;
        specs[c].name = names[c];
        specs[c].declared_type = saw_value ? ladder[rung] : ColumnType::STRING;
        specs[c].nullable = nullable;
    }
    return specs;
}

namespace {

bool has_csv_extension(const std::filesystem::path& p) {
    std::string ext = to_lower(p.extension().string());
    return ext == ".csv";
}

std::optional<std::string> read_sidecar(const std::filesystem::path& csv_path) {
    for (const char* ext : {".txt", ".md"}) {
        std::filesystem::path side = csv_path;
        side.replace_extension(ext);
        std::error_code ec;
        if (std::filesystem::is_regular_file(side, ec)) {
            std::string text = trim(read_text_file(side));
            if (!text.empty()) return text;
        }
    }
    return std::nullopt;
}

std::map<std::string, std::string> load_lineage_ids(const std::filesystem::path& root) {
    std::map<std::string, std::string> out;
    std::filesystem::path p = metalake_dir(root) / "lineage.jsonl";
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) return out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("derived_table_id")) continue;
        std::string id = j["derived_table_id"].get<std::string>();
        out[id] = id;
    }
    return out;
}

}  // namespace

std::filesystem::path metalake_dir(const std::filesystem::path& lake_root) {
    return lake_root / ".metalake";
}

std::filesystem::path catalog_path(const std::filesystem::path& lake_root) {
    return metalake_dir(lake_root) / "catalog.jsonl";
}

std::filesystem::path table_file(const CatalogStore& c, const TableEntry& e) {
    return std::filesystem::path(c.lake_root) / e.source_path;
}

CatalogStore ingest_lake(const std::filesystem::path& root_dir,
                         const IngestOptions& options, IngestReport* report) {
    std::error_code ec;
    if (!std::filesystem::is_directory(root_dir, ec)) {
        throw UnreadableFile("lake root " + root_dir.string());
    }

    std::vector<std::filesystem::path> files;
    for (auto it = std::filesystem::recursive_directory_iterator(root_dir);
         it != std::filesystem::recursive_directory_iterator(); ++it) {
        if (it->is_directory() && it->path().filename() == ".metalake") {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && has_csv_extension(it->path())) {
            files.push_back(std::filesystem::relative(it->path(), root_dir));
        }
    }
    std::sort(files.begin(), files.end());

    auto lineage_ids = load_lineage_ids(root_dir);

    CatalogStore store;
    store.lake_root = root_dir.string();
    std::set<std::string> used_ids;

    for (const auto& rel : files) {
        std::filesystem::path abs = root_dir / rel;
        CsvTable data;
        try {
            data = read_csv_file(abs);
        } catch (const MetalakeError& e) {
            if (report) report->skipped.emplace_back(rel.generic_string(), e.what());
            continue;
        }

        TableEntry entry;
        std::string base_id = path_to_table_id(rel);
        std::string id = base_id;
        int suffix = 2;
        while (used_ids.count(id)) id = base_id + "_" + std::to_string(suffix++);
        used_ids.insert(id);

        entry.table_id = id;
        entry.name = rel.stem().string();
        entry.source_path = rel.generic_string();
        entry.columns = infer_schema(data.header, data.rows, options.inference_row_cap);
        entry.row_count = static_cast<int64_t>(data.rows.size());
        entry.user_description = read_sidecar(abs);
        if (lineage_ids.count(id)) entry.lineage_id = id;

        store.entries.emplace(entry.table_id, std::move(entry));
        if (report) ++report->ingested;
    }
    return store;
}

namespace {

json entry_to_json(const TableEntry& e) {
    json cols = json::array();
    for (const auto& c : e.columns) {
        cols.push_back({{"name", c.name},
                        {"declared_type", column_type_name(c.declared_type)},
                        {"nullable", c.nullable}});
    }
    json j = {{"table_id", e.table_id},
              {"name", e.name},
              {"source_path", e.source_path},
              {"columns", cols},
              {"row_count", e.row_count}};
    if (e.user_description) j["user_description"] = *e.user_description;
    if (e.lineage_id) j["lineage_id"] = *e.lineage_id;
    return j;
}

TableEntry entry_from_json(const json& j) {
    TableEntry e;
    e.table_id = j.at("table_id").get<std::string>();
    e.name = j.at("name").get<std::string>();
    e.source_path = j.at("source_path").get<std::string>();
    e.row_count = j.at("row_count").get<int64_t>();
    for (const auto& cj : j.at("columns")) {
        ColumnSpec c;
        c.name = cj.at("name").get<std::string>();
        auto t = column_type_from_name(cj.at("declared_type").get<std::string>());
        if (!t) throw CorruptCatalog("bad declared_type for " + e.table_id);
        c.declared_type = *t;
        c.nullable = cj.at("nullable").get<bool>();
        e.columns.push_back(std::move(c));
    }
    if (j.contains("user_description")) e.user_description = j["user_description"].get<std::string>();
    if (j.contains("lineage_id")) e.lineage_id = j["lineage_id"].get<std::string>();
    return e;
}

}  // namespace

void save_catalog(const CatalogStore& c, const std::filesystem::path& path) {
    std::string out;
    json header = {{"format", "metalake-catalog"}, {"version", 1}, {"lake_root", c.lake_root}};
    out += header.dump();
    out += '\n';
    for (const auto& [id, entry] : c.entries) {
        out += entry_to_json(entry).dump();
        out += '\n';
    }
    write_text_file(path, out);
}

CatalogStore load_catalog(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const UnreadableFile& e) {
        throw CorruptCatalog(e.what());
    }

    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw CorruptCatalog("missing header in " + path.string());
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "metalake-catalog" ||
        header.value("version", 0) != 1) {
        throw CorruptCatalog("bad header in " + path.string());
    }

    CatalogStore store;
    // Lakes are relocatable: the root is wherever the catalog actually lives,
    // not whatever path ingest was invoked with.
    std::filesystem::path dir = path.parent_path();
    store.lake_root = (dir.filename() == ".metalake" ? dir.parent_path() : dir).string();
    if (store.lake_root.empty()) store.lake_root = ".";
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw CorruptCatalog("bad entry line in " + path.string());
        try {
            TableEntry e = entry_from_json(j);
            store.entries.emplace(e.table_id, std::move(e));
        } catch (const json::exception& e) {
            throw CorruptCatalog(std::string("bad entry: ") + e.what());
        }
    }
    return store;
}

}  // namespace metalake
