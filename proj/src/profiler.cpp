#include "metalake/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metalake/csv.hpp"
#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

const ColumnProfile& TableProfile::get(const std::string& column) const {
    for (const auto& c : columns) {
        if (c.column == column) return c;
    }
    throw UnknownColumn(column + " in " + table_id);
}

std::string canonical_value(ColumnType t, const std::string& cell) {
    switch (t) {
        case ColumnType::INTEGER:
        case ColumnType::FLOAT: {
            auto v = parse_double_strict(cell);
            if (v) return format_number(*v, t == ColumnType::INTEGER);
            return trim(cell);
        }
        case ColumnType::BOOLEAN:
            return to_lower(trim(cell));
        case ColumnType::DATE:
            return trim(cell);
        case ColumnType::STRING:
            return cell;
    }
    return cell;
}

namespace {

Histogram make_histogram(const std::vector<double>& values, double lo, double hi) {
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    if (lo == hi) {
        h.counts = {static_cast<int64_t>(values.size())};
        return h;
    }
    h.counts.assign(10, 0);
    double width = (hi - lo) / 10.0;
    for (double x : values) {
        int bin = static_cast<int>((x - lo) / width);
        if (bin < 0) bin = 0;
        if (bin > 9) bin = 9;  // x == hi lands in the last bin
        ++h.counts[static_cast<size_t>(bin)];
    }
    return h;
}

ColumnProfile profile_column(const TableEntry& entry, size_t col_index,
                             const std::vector<std::vector<std::string>>& rows, int top_k) {
    const ColumnSpec& spec = entry.columns[col_index];
    ColumnProfile p;
    p.column = spec.name;

    int64_t nulls = 0;
    std::map<std::string, int64_t> freq;
    std::vector<double> numeric;
    const bool numeric_col = is_numeric_type(spec.declared_type);

    for (const auto& row : rows) {
        const std::string& cell = row[col_index];
        if (is_null_token(cell)) {
            ++nulls;
            continue;
        }
        std::string key = canonical_value(spec.declared_type, cell);
        ++freq[key];
        if (numeric_col) {
            if (auto v = parse_double_strict(cell)) numeric.push_back(*v);
        }
    }

    int64_t row_count = static_cast<int64_t>(rows.size());
    p.null_ratio = row_count == 0 ? 0.0 : static_cast<double>(nulls) / static_cast<double>(row_count);
    p.distinct_count = static_cast<int64_t>(freq.size());

    std::vector<std::pair<std::string, int64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (top_k >= 0 && ranked.size() > static_cast<size_t>(top_k)) {
        ranked.resize(static_cast<size_t>(top_k));
    }
    p.top_k = std::move(ranked);

    if (freq.empty()) return p;

    if (numeric_col && !numeric.empty()) {
        std::sort(numeric.begin(), numeric.end());
        double lo = numeric.front(), hi = numeric.back();
        p.min_num = lo;
        p.max_num = hi;
        p.min_text = format_number(lo, spec.declared_type == ColumnType::INTEGER);
        p.max_text = format_number(hi, spec.declared_type == ColumnType::INTEGER);
        double sum = 0.0;
        for (double v : numeric) sum += v;
        p.mean = sum / static_cast<double>(numeric.size());
        size_t n = numeric.size();
        p.median = (n % 2 == 1) ? numeric[n / 2]
                                : (numeric[n / 2 - 1] + numeric[n / 2]) / 2.0;
        p.histogram = make_histogram(numeric, lo, hi);
    } else {
        // lexicographic extremes over canonical values
        p.min_text = freq.begin()->first;
        p.max_text = freq.rbegin()->first;
    }
    return p;
}

}  // namespace

TableProfile profile_table(const CatalogStore& c, const TableEntry& entry,
                           const ProfileOptions& options) {
    CsvTable data = read_csv_file(table_file(c, entry));
    TableProfile tp;
    tp.table_id = entry.table_id;
    tp.row_count = static_cast<int64_t>(data.rows.size());
    tp.columns.reserve(entry.columns.size());
    for (size_t i = 0; i < entry.columns.size(); ++i) {
        tp.columns.push_back(profile_column(entry, i, data.rows, options.top_k));
    }
    return tp;
}

Histogram column_histogram(const CatalogStore& c, const TableEntry& entry,
                           const std::string& column) {
    const ColumnSpec* spec = nullptr;
    for (const auto& col : entry.columns) {
        if (col.name == column) spec = &col;
    }
    if (!spec) throw UnknownColumn(column + " in " + entry.table_id);
    if (!is_numeric_type(spec->declared_type)) {
        throw NotNumeric(column + " is " + column_type_name(spec->declared_type));
    }
    TableProfile tp = profile_table(c, entry);
    const ColumnProfile& cp = tp.get(column);
    if (cp.histogram) return *cp.histogram;
    return Histogram{};  // no non-null values
}

namespace {

json profile_to_json(const TableProfile& p) {
    json cols = json::array();
    for (const auto& c : p.columns) {
        json cj = {{"column", c.column},
                   {"null_ratio", c.null_ratio},
                   {"distinct_count", c.distinct_count}};
        if (c.min_text) cj["min"] = *c.min_text;
        if (c.max_text) cj["max"] = *c.max_text;
        if (c.min_num) cj["min_num"] = *c.min_num;
        if (c.max_num) cj["max_num"] = *c.max_num;
        if (c.mean) cj["mean"] = *c.mean;
        if (c.median) cj["median"] = *c.median;
        json tk = json::array();
        for (const auto& [v, n] : c.top_k) tk.push_back({{"value", v}, {"count", n}});
        cj["top_k"] = tk;
        if (c.histogram) {
            cj["histogram"] = {{"lo", c.histogram->lo},
                               {"hi", c.histogram->hi},
                               {"counts", c.histogram->counts}};
        }
        cols.push_back(std::move(cj));
    }
    return json{{"table_id", p.table_id}, {"row_count", p.row_count}, {"columns", cols}};
}

TableProfile profile_from_json(const json& j) {
    TableProfile p;
    p.table_id = j.at("table_id").get<std::string>();
    p.row_count = j.at("row_count").get<int64_t>();
    for (const auto& cj : j.at("columns")) {
        ColumnProfile c;
        c.column = cj.at("column").get<std::string>();
        c.null_ratio = cj.at("null_ratio").get<double>();
        c.distinct_count = cj.at("distinct_count").get<int64_t>();
        if (cj.contains("min")) c.min_text = cj["min"].get<std::string>();
        if (cj.contains("max")) c.max_text = cj["max"].get<std::string>();
        if (cj.contains("min_num")) c.min_num = cj["min_num"].get<double>();
        if (cj.contains("max_num")) c.max_num = cj["max_num"].get<double>();
        if (cj.contains("mean")) c.mean = cj["mean"].get<double>();
        if (cj.contains("median")) c.median = cj["median"].get<double>();
        for (const auto& tj : cj.at("top_k")) {
            c.top_k.emplace_back(tj.at("value").get<std::string>(), tj.at("count").get<int64_t>());
        }
        if (cj.contains("histogram")) {
            Histogram h;
            h.lo = cj["histogram"].at("lo").get<double>();
            h.hi = cj["histogram"].at("hi").get<double>();
            h.counts = cj["histogram"].at("counts").get<std::vector<int64_t>>();
            c.histogram = std::move(h);
        }
        p.columns.push_back(std::move(c));
    }
    return p;
}

}  // namespace

std::string profile_to_json_line(const TableProfile& p) {
    return profile_to_json(p).dump();
}

std::filesystem::path profiles_path(const std::filesystem::path& lake_root) {
    return metalake_dir(lake_root) / "profiles.jsonl";
}

void save_profiles(const std::vector<TableProfile>& profiles, const std::filesystem::path& path) {
    std::string out;
    out += json{{"format", "metalake-profiles"}, {"version", 1}}.dump();
    out += '\n';
    for (const auto& p : profiles) {
        out += profile_to_json_line(p);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<TableProfile> load_profiles(const std::filesystem::path& path) {
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
    if (header.is_discarded() || header.value("format", "") != "metalake-profiles" ||
        header.value("version", 0) != 1) {
        throw CorruptCatalog("bad header in " + path.string());
    }
    std::vector<TableProfile> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw CorruptCatalog("bad profile line in " + path.string());
        out.push_back(profile_from_json(j));
    }
    return out;
}

}  // namespace metalake
