#include "metalake/tools.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metalake/csv.hpp"
#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

const ColumnSpec& resolve_column(const TableEntry& entry, const std::string& column) {
    for (const auto& c : entry.columns) {
        if (c.name == column) return c;
    }
    std::string sanitized = sanitize_identifier(column);
    for (const auto& c : entry.columns) {
        if (c.name == sanitized) return c;
    }
    throw UnknownColumn(column + " in " + entry.table_id);
}

namespace {

size_t column_index(const TableEntry& entry, const ColumnSpec& spec) {
    for (size_t i = 0; i < entry.columns.size(); ++i) {
        if (&entry.columns[i] == &spec) return i;
    }
    throw UnknownColumn(spec.name);
}

bool cell_matches(const ColumnSpec& spec, const std::string& cell, const std::string& value,
                  const std::optional<double>& value_num) {
    if (is_null_token(cell)) return false;
    if (is_numeric_type(spec.declared_type) && value_num) {
        if (auto cv = parse_double_strict(cell)) return *cv == *value_num;
        return trim(cell) == trim(value);
    }
    if (spec.declared_type == ColumnType::STRING) {
        return to_lower(trim(cell)) == to_lower(trim(value));
    }
    return trim(cell) == trim(value);
}

}  // namespace

ProfileReport column_profiler(const CatalogStore& c, const std::string& table_id,
                              const std::string& column) {
    const TableEntry& entry = c.get(table_id);
    const ColumnSpec& spec = resolve_column(entry, column);
    ProfileOptions options;
    options.top_k = 10;
    TableProfile tp = profile_table(c, entry, options);
    ProfileReport report;
    report.table_id = table_id;
    report.column = spec.name;
    report.type = spec.declared_type;
    report.profile = tp.get(spec.name);
    return report;
}

FindReport data_finder(const CatalogStore& c, const std::string& table_id,
                       const std::string& value, const std::optional<std::string>& column) {
    const TableEntry& entry = c.get(table_id);
    CsvTable data = read_csv_file(table_file(c, entry));

    std::vector<size_t> searched;
    if (column) {
        const ColumnSpec& spec = resolve_column(entry, *column);
        searched.push_back(column_index(entry, spec));
    } else {
        for (size_t i = 0; i < entry.columns.size(); ++i) searched.push_back(i);
    }

    FindReport report;
    report.table_id = table_id;
    if (column) report.column = resolve_column(entry, *column).name;
    report.value = value;

    std::optional<double> value_num = parse_double_strict(value);
    int64_t total = 0;
    for (size_t idx : searched) {
        const ColumnSpec& spec = entry.columns[idx];
        int64_t count = 0;
        for (const auto& row : data.rows) {
            if (cell_matches(spec, row[idx], value, value_num)) ++count;
        }
        report.match_count[spec.name] = count;
        if (count > 0) {
            report.matching_columns.push_back(spec.name);
            total += count;
        }
    }
    report.found = total > 0;
    return report;
}

namespace {

enum class JoinNorm { NUMERIC, CASEFOLD, TRIM };

// Both sides of a join comparison must normalize identically.
JoinNorm pick_join_norm(ColumnType l, ColumnType r, bool* mismatch) {
    *mismatch = false;
    if (is_numeric_type(l) && is_numeric_type(r)) return JoinNorm::NUMERIC;
    if (l == r && l == ColumnType::STRING) return JoinNorm::CASEFOLD;
    if (l == r) return JoinNorm::TRIM;
    *mismatch = true;
    return JoinNorm::TRIM;
}

std::optional<std::string> join_key(JoinNorm norm, const std::string& cell) {
    if (is_null_token(cell)) return std::nullopt;
    switch (norm) {
        case JoinNorm::NUMERIC: {
            if (auto v = parse_double_strict(cell)) {
                char buf[40];
                std::snprintf(buf, sizeof buf, "%.17g", *v);
                return std::string(buf);
            }
            return trim(cell);
        }
        case JoinNorm::CASEFOLD:
            return to_lower(trim(cell));
        case JoinNorm::TRIM:
            return trim(cell);
    }
    return trim(cell);
}

}  // namespace

JoinabilityReport joinability_check(const CatalogStore& c, const std::string& left_table,
                                    const std::string& left_column,
                                    const std::string& right_table,
                                    const std::string& right_column) {
    const TableEntry& le = c.get(left_table);
    const TableEntry& re = c.get(right_table);
    const ColumnSpec& ls = resolve_column(le, left_column);
    const ColumnSpec& rs = resolve_column(re, right_column);
    size_t li = column_index(le, ls);
    size_t ri = column_index(re, rs);

    JoinabilityReport report;
    report.left_table = left_table;
    report.left_column = ls.name;
    report.right_table = right_table;
    report.right_column = rs.name;

    JoinNorm norm = pick_join_norm(ls.declared_type, rs.declared_type, &report.type_mismatch);

    CsvTable ld = read_csv_file(table_file(c, le));
    CsvTable rd = read_csv_file(table_file(c, re));

    std::set<std::string> lset, rset;
    int64_t left_rows_nonnull = 0, left_rows_absent = 0;

    for (const auto& row : rd.rows) {
        if (auto key = join_key(norm, row[ri])) rset.insert(*key);
    }
    for (const auto& row : ld.rows) {
        auto key = join_key(norm, row[li]);
        if (!key) continue;
        ++left_rows_nonnull;
        if (!rset.count(*key)) ++left_rows_absent;
        lset.insert(*key);
    }

    int64_t overlap = 0;
    for (const auto& k : lset) {
        if (rset.count(k)) ++overlap;
    }

    report.overlap_count = overlap;
    report.distinct_left = static_cast<int64_t>(lset.size());
    report.distinct_right = static_cast<int64_t>(rset.size());
    int64_t uni = report.distinct_left + report.distinct_right - overlap;
    report.containment_lr = report.distinct_left ? static_cast<double>(overlap) / report.distinct_left : 0.0;
    report.containment_rl = report.distinct_right ? static_cast<double>(overlap) / report.distinct_right : 0.0;
    report.jaccard = uni ? static_cast<double>(overlap) / uni : 0.0;
    report.null_ref_ratio_lr =
        left_rows_nonnull ? static_cast<double>(left_rows_absent) / left_rows_nonnull : 0.0;
    return report;
}

std::string render_report(const ProfileReport& r) {
    std::ostringstream out;
    out << "tool: column_profiler\ntable: " << r.table_id << "\ncolumn: " << r.column
        << "\ntype: " << column_type_name(r.type);
    const ColumnProfile& p = r.profile;
    if (p.min_text) out << "\nmin: " << *p.min_text;
    if (p.max_text) out << "\nmax: " << *p.max_text;
    if (p.mean) out << "\nmean: " << format_stat(*p.mean);
    if (p.median) out << "\nmedian: " << format_stat(*p.median);
    out << "\nnull_ratio: " << format_ratio(p.null_ratio);
    out << "\ndistinct: " << p.distinct_count;
    if (!p.top_k.empty()) {
        out << "\ntop: ";
        for (size_t i = 0; i < p.top_k.size() && i < 5; ++i) {
            if (i) out << ", ";
            out << p.top_k[i].first << " (x" << p.top_k[i].second << ")";
        }
    }
    if (p.histogram) {
        out << "\nhistogram: ";
        for (size_t i = 0; i < p.histogram->counts.size(); ++i) {
            if (i) out << "|";
            out << p.histogram->counts[i];
        }
    }
    return out.str();
}

std::string render_report(const FindReport& r) {
    std::ostringstream out;
    out << "tool: data_finder\ntable: " << r.table_id;
    if (r.column) out << "\ncolumn: " << *r.column;
    out << "\nvalue: " << r.value << "\nfound: " << (r.found ? "true" : "false");
    if (!r.matching_columns.empty()) {
        out << "\nmatches: ";
        for (size_t i = 0; i < r.matching_columns.size(); ++i) {
            if (i) out << ", ";
            const auto& col = r.matching_columns[i];
            out << col << " (x" << r.match_count.at(col) << ")";
        }
    }
    return out.str();
}

std::string render_report(const JoinabilityReport& r) {
    std::ostringstream out;
    out << "tool: joinability_check"
        << "\nleft: " << r.left_table << "." << r.left_column
        << "\nright: " << r.right_table << "." << r.right_column
        << "\noverlap_count: " << r.overlap_count
        << "\ndistinct_left: " << r.distinct_left
        << "\ndistinct_right: " << r.distinct_right
        << "\ncontainment_lr: " << format_ratio(r.containment_lr)
        << "\ncontainment_rl: " << format_ratio(r.containment_rl)
        << "\njaccard: " << format_ratio(r.jaccard)
        << "\nnull_ref_ratio_lr: " << format_ratio(r.null_ref_ratio_lr)
        << "\ntype_mismatch: " << (r.type_mismatch ? "true" : "false");
    return out.str();
}

std::string report_json(const ProfileReport& r) {
    json j = {{"tool", "column_profiler"},
              {"table_id", r.table_id},
              {"column", r.column},
              {"type", column_type_name(r.type)},
              {"null_ratio", r.profile.null_ratio},
              {"distinct_count", r.profile.distinct_count}};
    if (r.profile.min_text) j["min"] = *r.profile.min_text;
    if (r.profile.max_text) j["max"] = *r.profile.max_text;
    if (r.profile.mean) j["mean"] = *r.profile.mean;
    if (r.profile.median) j["median"] = *r.profile.median;
    json tk = json::array();
    for (const auto& [v, n] : r.profile.top_k) tk.push_back({{"value", v}, {"count", n}});
    j["top_k"] = tk;
    if (r.profile.histogram) {
        j["histogram"] = {{"lo", r.profile.histogram->lo},
                          {"hi", r.profile.histogram->hi},
                          {"counts", r.profile.histogram->counts}};
    }
    return j.dump();
}

std::string report_json(const FindReport& r) {
    json j = {{"tool", "data_finder"},
              {"table_id", r.table_id},
              {"value", r.value},
              {"found", r.found},
              {"matching_columns", r.matching_columns},
              {"match_count", r.match_count}};
    if (r.column) j["column"] = *r.column;
    return j.dump();
}

std::string report_json(const JoinabilityReport& r) {
    json j = {{"tool", "joinability_check"},
              {"left_table", r.left_table},
              {"left_column", r.left_column},
              {"right_table", r.right_table},
              {"right_column", r.right_column},
              {"overlap_count", r.overlap_count},
              {"distinct_left", r.distinct_left},
              {"distinct_right", r.distinct_right},
              {"containment_lr", r.containment_lr},
              {"containment_rl", r.containment_rl},
              {"jaccard", r.jaccard},
              {"null_ref_ratio_lr", r.null_ref_ratio_lr},
              {"type_mismatch", r.type_mismatch}};
    return j.dump();
}

}  // namespace metalake
