#include "metalake/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

using nlohmann::json;

std::string recall_denominator_name(RecallDenominator d) {
    return d == RecallDenominator::PER_PARTITION ? "per_partition" : "per_base";
}

static Scores make_scores(double correct, double units, double predicted) {
    Scores s;
    s.recall = units > 0 ? correct / units : 0.0;
    s.precision = predicted > 0 ? correct / predicted : 0.0;
    s.f1 = (s.precision + s.recall) > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

Scores score_against_reference(const std::vector<std::string>& ref,
                               const std::vector<std::string>& pred) {
    std::set<std::string> ref_set(ref.begin(), ref.end());
    if (ref_set.empty()) throw EmptyReference("reference table set is empty");
    std::set<std::string> pred_set(pred.begin(), pred.end());
    double hit = 0;
    for (const auto& t : pred_set) hit += ref_set.count(t);
    Scores s = make_scores(hit, static_cast<double>(ref_set.size()),
                           static_cast<double>(pred_set.size()));
    return s;
}

// ---------------------------------------------------------------------------
// Gold-SQL subset parser: tokenizer plus a straight-line descent over
// SELECT ... FROM refs [WHERE conjunction]. Anything fancier is rejected.

namespace {

struct Tok {
    std::string text;   // strings hold the unquoted content
    std::string upper;  // "" for strings
    bool is_string = false;
    size_t pos = 0;
};

bool is_ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9') || c == '$'; }

std::vector<Tok> lex_sql(const std::string& sql) {
    std::vector<Tok> toks;
    size_t i = 0;
    while (i < sql.size()) {
        char c = sql[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++i;
            continue;
        }
        Tok t;
        t.pos = i;
        if (c == '\'' || c == '"') {
            char q = c;
            ++i;
            std::string out;
            bool closed = false;
            while (i < sql.size()) {
                if (sql[i] == q) {
                    if (i + 1 < sql.size() && sql[i + 1] == q) {
                        out.push_back(q);
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                out.push_back(sql[i++]);
            }
            if (!closed)
                throw UnsupportedSQL("unterminated string literal at offset " +
                                     std::to_string(t.pos));
            t.text = out;
            t.is_string = true;
        } else if (is_ident_start(c)) {
            size_t j = i;
            while (j < sql.size() && is_ident_char(sql[j])) ++j;
            t.text = sql.substr(i, j - i);
            t.upper = t.text;
            for (char& ch : t.upper) ch = static_cast<char>(std::toupper(ch));
            i = j;
        } else if ((c >= '0' && c <= '9') ||
                   (c == '.' && i + 1 < sql.size() && sql[i + 1] >= '0' && sql[i + 1] <= '9')) {
            size_t j = i;
            while (j < sql.size() &&
                   ((sql[j] >= '0' && sql[j] <= '9') || sql[j] == '.' || sql[j] == 'e' ||
                    sql[j] == 'E' ||
                    ((sql[j] == '+' || sql[j] == '-') && (sql[j - 1] == 'e' || sql[j - 1] == 'E'))))
                ++j;
            t.text = sql.substr(i, j - i);
            i = j;
        } else {
            // two-char comparison operators stay one token
            if ((c == '<' || c == '>' || c == '!') && i + 1 < sql.size() &&
                (sql[i + 1] == '=' || sql[i + 1] == '>')) {
                t.text = sql.substr(i, 2);
                i += 2;
            } else {
                t.text = std::string(1, c);
                ++i;
            }
        }
        toks.push_back(std::move(t));
    }
    return toks;
}

const std::set<std::string> kReserved = {"SELECT", "FROM",  "AS",    "JOIN",  "INNER", "LEFT",
                                         "RIGHT",  "FULL",  "OUTER", "CROSS", "ON",    "USING",
                                         "WHERE",  "AND",   "OR",    "IN",    "NOT",   "GROUP",
                                         "ORDER",  "BY",    "LIMIT", "HAVING"};

bool is_plain_ident(const Tok& t) {
    return !t.is_string && !t.text.empty() && is_ident_start(t.text[0]);
}
bool is_join_start(const Tok& t) {
    static const std::set<std::string> kJoin = {"JOIN", "INNER", "LEFT", "RIGHT", "FULL", "CROSS"};
    return !t.is_string && kJoin.count(t.upper) > 0;
}
bool is_clause_end(const Tok& t) {
    static const std::set<std::string> kEnd = {"WHERE", "GROUP", "ORDER", "LIMIT", "HAVING"};
    return !t.is_string && kEnd.count(t.upper) > 0;
}
bool is_literal(const Tok& t) {
    if (t.is_string) return true;
    if (t.text.empty()) return false;
    char c = t.text[0];
    return (c >= '0' && c <= '9') || c == '.';
}

}  // namespace

GoldQuerySpec parse_gold_sql(const std::string& sql) {
    auto toks = lex_sql(sql);
    auto unsupported = [&](const std::string& what, size_t tok_index) -> UnsupportedSQL {
        size_t pos = tok_index < toks.size() ? toks[tok_index].pos : sql.size();
        std::string span = sql.substr(pos, std::min<size_t>(24, sql.size() - pos));
        return UnsupportedSQL(what + " at offset " + std::to_string(pos) + ": \"" + span + "\"");
    };

    for (size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].upper == "SELECT" && i > 0 && toks[i - 1].text == "(")
            throw unsupported("subquery", i - 1);
        if (toks[i].upper == "UNION" || toks[i].upper == "EXCEPT" || toks[i].upper == "INTERSECT")
            throw unsupported("set operation", i);
    }
    if (toks.empty() || toks[0].upper != "SELECT") throw unsupported("expected SELECT", 0);

    size_t n = toks.size();
    size_t i = 1;
    int depth = 0;
    while (i < n && !(depth == 0 && toks[i].upper == "FROM")) {
        if (toks[i].text == "(") ++depth;
        if (toks[i].text == ")") --depth;
        ++i;
    }
    if (i == n) throw unsupported("missing FROM clause", n);
    ++i;

    GoldQuerySpec spec;
    spec.gold_sql = sql;
    std::map<std::string, std::string> alias;  // lowercased alias/name -> table as written
    std::set<std::string> seen_lower;

    auto parse_table_ref = [&]() {
        if (i >= n || !is_plain_ident(toks[i]) || kReserved.count(toks[i].upper))
            throw unsupported("expected table name", i);
        std::string name = toks[i].text;
        ++i;
        while (i + 1 < n && toks[i].text == "." && is_plain_ident(toks[i + 1])) {
            name += "." + toks[i + 1].text;
            i += 2;
        }
        std::string al;
        if (i < n && toks[i].upper == "AS") {
            ++i;
            if (i >= n || !is_plain_ident(toks[i])) throw unsupported("expected alias", i);
            al = toks[i].text;
            ++i;
        } else if (i < n && is_plain_ident(toks[i]) && !kReserved.count(toks[i].upper)) {
            al = toks[i].text;
            ++i;
        }
        if (!seen_lower.count(to_lower(name))) {
            seen_lower.insert(to_lower(name));
            spec.base_tables.push_back(name);
        }
        alias[to_lower(name)] = name;
        if (!al.empty()) alias[to_lower(al)] = name;
    };

    auto skip_join_condition = [&]() {
        int d = 0;
        while (i < n) {
            if (d == 0 && (toks[i].text == "," || is_join_start(toks[i]) || is_clause_end(toks[i])))
                return;
            if (toks[i].text == "(") ++d;
            if (toks[i].text == ")") --d;
            ++i;
        }
    };

    parse_table_ref();
    while (i < n) {
        if (toks[i].text == ",") {
            ++i;
            parse_table_ref();
        } else if (is_join_start(toks[i])) {
            while (i < n && toks[i].upper != "JOIN") {
                if (!is_join_start(toks[i]) && toks[i].upper != "OUTER")
                    throw unsupported("expected JOIN", i);
                ++i;
            }
            if (i >= n) throw unsupported("expected JOIN", i);
            ++i;  // JOIN
            parse_table_ref();
            if (i < n && (toks[i].upper == "ON" || toks[i].upper == "USING")) {
                ++i;
                skip_join_condition();
            }
        } else {
            break;
        }
    }

    auto resolve_table = [&](const std::string& qualifier) -> std::optional<std::string> {
        if (!qualifier.empty()) {
            auto it = alias.find(to_lower(qualifier));
            if (it != alias.end()) return it->second;
            return qualifier;
        }
        if (spec.base_tables.size() == 1) return spec.base_tables.front();
        return std::nullopt;
    };

    if (i < n && toks[i].upper == "WHERE") {
        ++i;
        size_t end = i;
        int d = 0;
        while (end < n && !(d == 0 && is_clause_end(toks[end]))) {
            if (toks[end].text == "(") ++d;
            if (toks[end].text == ")") --d;
            ++end;
        }
        // split the clause into depth-0 AND conjuncts
        std::vector<std::pair<size_t, size_t>> conjuncts;
        size_t start = i;
        d = 0;
        for (size_t j = i; j < end; ++j) {
            if (toks[j].text == "(") ++d;
            if (toks[j].text == ")") --d;
            if (d == 0 && toks[j].upper == "AND") {
                conjuncts.emplace_back(start, j);
                start = j + 1;
            }
        }
        if (start < end) conjuncts.emplace_back(start, end);

        for (auto [s, e] : conjuncts) {
            // strip one level of wrapping parentheses
            while (e - s >= 2 && toks[s].text == "(" && toks[e - 1].text == ")") {
                int dd = 0;
                bool wraps = true;
                for (size_t j = s; j + 1 < e; ++j) {
                    if (toks[j].text == "(") ++dd;
                    if (toks[j].text == ")") --dd;
                    if (dd == 0) {
                        wraps = false;
                        break;
                    }
                }
                if (!wraps) break;
                ++s;
                --e;
            }
            bool has_or = false;
            int dd = 0;
            for (size_t j = s; j < e; ++j) {
                if (toks[j].text == "(") ++dd;
                if (toks[j].text == ")") --dd;
                if (dd == 0 && toks[j].upper == "OR") has_or = true;
            }
            if (has_or) continue;  // disjunctions carry no usable constraint

            // [qual .] col = literal   |   literal = [qual .] col   |   col IN (lits)
            auto read_column = [&](size_t& j, std::string& qual,
                                   std::string& col) -> bool {
                if (j >= e || !is_plain_ident(toks[j]) || kReserved.count(toks[j].upper))
                    return false;
                col = toks[j].text;
                ++j;
                if (j + 1 < e && toks[j].text == "." && is_plain_ident(toks[j + 1])) {
                    qual = col;
                    col = toks[j + 1].text;
                    j += 2;
                }
                return true;
            };
            size_t j = s;
            std::string qual, col;
            if (read_column(j, qual, col)) {
                if (j + 1 < e && toks[j].text == "=" && is_literal(toks[j + 1]) && j + 2 == e) {
                    spec.value_constraints.push_back(
                        {resolve_table(qual), col, toks[j + 1].text});
                } else if (j < e && toks[j].upper == "IN" && j + 1 < e &&
                           toks[j + 1].text == "(") {
                    size_t k = j + 2;
                    bool ok = true;
                    std::vector<std::string> values;
                    while (k < e && toks[k].text != ")") {
                        if (!is_literal(toks[k])) {
                            ok = false;
                            break;
                        }
                        values.push_back(toks[k].text);
                        ++k;
                        if (k < e && toks[k].text == ",") ++k;
                    }
                    if (ok && k < e && toks[k].text == ")" && k + 1 == e) {
                        for (const auto& v : values)
                            spec.value_constraints.push_back({resolve_table(qual), col, v});
                    }
                }
            } else if (s + 1 < e && is_literal(toks[s]) && toks[s + 1].text == "=") {
                size_t jj = s + 2;
                std::string q2, c2;
                if (read_column(jj, q2, c2) && jj == e)
                    spec.value_constraints.push_back({resolve_table(q2), c2, toks[s].text});
            }
        }
    }
    if (spec.base_tables.empty()) throw UnsupportedSQL("no base tables parsed from FROM clause");
    return spec;
}

// ---------------------------------------------------------------------------
// Lineage resolution and the three-condition verdicts.

std::vector<const LineageRecord*> resolve_chain(const LineageStore& lineage,
                                                const std::string& table_id) {
    std::vector<const LineageRecord*> chain;
    std::set<std::string> visited;
    std::string cur = table_id;
    while (true) {
        auto it = lineage.find(cur);
        if (it == lineage.end()) return chain;
        if (!visited.insert(cur).second)
            throw UnknownLineage("lineage cycle through " + cur);
        chain.push_back(&it->second);
        cur = it->second.base_table_id;
        if (cur.empty()) throw UnknownLineage("empty base_table_id for " + it->first);
    }
}

std::string resolve_base(const LineageStore& lineage, const std::string& table_id) {
    auto chain = resolve_chain(lineage, table_id);
    return chain.empty() ? table_id : chain.back()->base_table_id;
}

namespace {

const std::map<std::string, std::string> kNoiseCategory = {
    {"STG_DUPROWS", "stg"},   {"STG_NULLS", "stg"}, {"TEST_SAMPLE", "test"},
    {"SUBSET", "subset"},     {"DUPS", "dups"},     {"BROKEN_FK", "broken_fk"},
    {"NULLS", "nulls"},
};

std::string base_name(const std::string& table_id) {
    auto dot = table_id.rfind('.');
    return to_lower(dot == std::string::npos ? table_id : table_id.substr(dot + 1));
}

bool values_equal(const std::string& a, const std::string& b) {
    return to_lower(trim(a)) == to_lower(trim(b));
}

bool partition_matches(const LineageRecord& rec, const std::string& base,
                       const std::vector<ValueConstraint>& constraints) {
    auto col = rec.params.find("column");
    auto val = rec.params.find("value");
    if (col == rec.params.end() || val == rec.params.end()) return false;
    for (const auto& c : constraints) {
        if (c.table && base_name(*c.table) != base) continue;
        if (to_lower(c.column) != to_lower(col->second)) continue;
        if (values_equal(c.value, val->second)) return true;
    }
    return false;
}

}  // namespace

VerifyResult verify_selection(const std::vector<std::string>& pred, const GoldQuerySpec& spec,
                              const LineageStore& lineage, RecallDenominator denominator) {
    if (spec.base_tables.empty()) throw EmptyReference("gold spec has no base tables");
    VerifyResult result;
    result.denominator = denominator;

    std::set<std::string> required;
    for (const auto& t : spec.base_tables) required.insert(base_name(t));

    std::set<std::string> pred_set(pred.begin(), pred.end());
    std::set<std::string> whole_base_hits;                           // bases covered unpartitioned
    std::map<std::string, std::set<std::string>> partition_columns;  // base -> matched columns
    std::map<std::string, std::set<std::string>> partition_hits;     // base -> matched col=value

    for (const auto& id : pred_set) {
        auto chain = resolve_chain(lineage, id);
        std::string base = chain.empty() ? base_name(id) : base_name(chain.back()->base_table_id);
        TableVerdict v;
        v.table_id = id;

        if (!required.count(base)) {
            v.reason = "base table '" + base + "' is not required by the query";
            result.verdicts.push_back(std::move(v));
            continue;
        }
        const LineageRecord* noisy = nullptr;
        for (const auto* rec : chain)
            if (kNoiseCategory.count(rec->operation)) {
                noisy = rec;
                break;
            }
        if (noisy) {
            v.reason = "noise operation " + noisy->operation + " in lineage";
            result.verdicts.push_back(std::move(v));
            continue;
        }
        const LineageRecord* bad_partition = nullptr;
        std::vector<const LineageRecord*> partitions;
        for (const auto* rec : chain)
            if (rec->operation == "PARTITION") {
                partitions.push_back(rec);
                if (!partition_matches(*rec, base, spec.value_constraints)) bad_partition = rec;
            }
        if (bad_partition) {
            auto col = bad_partition->params.count("column") ? bad_partition->params.at("column")
                                                             : "?";
            auto val = bad_partition->params.count("value") ? bad_partition->params.at("value")
                                                            : "?";
            v.reason = "partition " + col + "=" + val + " does not match the filter constraints";
            result.verdicts.push_back(std::move(v));
            continue;
        }
        v.correct = true;
        v.reason = "ok";
        if (partitions.empty()) {
            whole_base_hits.insert(base);
        } else {
            for (const auto* rec : partitions) {
                partition_columns[base].insert(to_lower(rec->params.at("column")));
                partition_hits[base].insert(to_lower(rec->params.at("column")) + "=" +
                                            to_lower(trim(rec->params.at("value"))));
            }
        }
        result.verdicts.push_back(std::move(v));
    }

    // Recall units: one per base, except a base reached only through matching
    // partitions, which needs every constrained value on its partition columns.
    double units = 0, covered = 0;
    for (const auto& base : required) {
        bool whole = whole_base_hits.count(base) > 0;
        bool split = partition_hits.count(base) > 0;
        if (denominator == RecallDenominator::PER_BASE || whole || !split) {
            units += 1;
            covered += (whole || split) ? 1 : 0;
            continue;
        }
        std::set<std::string> constrained;
        for (const auto& c : spec.value_constraints) {
            if (c.table && base_name(*c.table) != base) continue;
            if (!c.table && required.size() > 1) continue;
            if (!partition_columns[base].count(to_lower(c.column))) continue;
            constrained.insert(to_lower(c.column) + "=" + to_lower(trim(c.value)));
        }
        units += static_cast<double>(std::max<size_t>(1, constrained.size()));
        covered += static_cast<double>(partition_hits[base].size());
    }
    result.required_units = static_cast<int64_t>(units);

    double correct = 0;
    for (const auto& v : result.verdicts) correct += v.correct ? 1 : 0;
    // Several clean variants of one base can all be correct, so unit coverage
    // (not the correct count) drives recall; it is capped at 1 by construction.
    result.scores.recall = units > 0 ? std::min(1.0, covered / units) : 0.0;
    result.scores.precision =
        pred_set.empty() ? 0.0 : correct / static_cast<double>(pred_set.size());
    double pr = result.scores.precision + result.scores.recall;
    result.scores.f1 = pr > 0 ? 2.0 * result.scores.precision * result.scores.recall / pr : 0.0;
    return result;
}

const std::vector<std::string> kNoiseCategories = {
    "clean", "stg", "test", "subset", "dups", "broken_fk", "nulls", "partition_mismatch"};

NoiseDistribution noise_distribution(const std::vector<SelectionSample>& samples,
                                     const LineageStore& lineage) {
    NoiseDistribution dist;
    for (const auto& cat : kNoiseCategories) dist.counts[cat] = 0;

    for (const auto& sample : samples) {
        for (const auto& id : sample.tables) {
            auto chain = resolve_chain(lineage, id);
            std::string category = "clean";
            for (const auto* rec : chain) {
                auto it = kNoiseCategory.find(rec->operation);
                if (it != kNoiseCategory.end()) {
                    category = it->second;
                    break;
                }
            }
            if (category == "clean" && sample.spec) {
                std::string base =
                    chain.empty() ? base_name(id) : base_name(chain.back()->base_table_id);
                for (const auto* rec : chain)
                    if (rec->operation == "PARTITION" &&
                        !partition_matches(*rec, base, sample.spec->value_constraints)) {
                        category = "partition_mismatch";
                        break;
                    }
            }
            dist.counts[category]++;
            dist.total++;
        }
    }
    for (const auto& [cat, count] : dist.counts)
        dist.percentages[cat] =
            dist.total > 0 ? 100.0 * static_cast<double>(count) / static_cast<double>(dist.total)
                           : 0.0;
    return dist;
}

std::vector<RecallAtKRow> recall_at_k(const std::vector<EvalTask>& tasks, const VectorIndex& index,
                                      EmbeddingProvider& embedder, const std::vector<int>& ks,
                                      double max_distance) {
    std::map<std::string, std::vector<std::vector<double>>> per_domain;  // domain -> task recalls
    for (const auto& task : tasks) {
        if (!task.ref_tables || task.ref_tables->empty()) continue;
        std::set<std::string> ref(task.ref_tables->begin(), task.ref_tables->end());
        std::vector<double> recalls;
        for (int k : ks) {
            auto top = baseline_topk(index, embedder, task.question, k, max_distance);
            double hit = 0;
            for (const auto& [id, dist] : top) hit += ref.count(id);
            recalls.push_back(hit / static_cast<double>(ref.size()));
        }
        per_domain[task.domain].push_back(recalls);
        per_domain["overall"].push_back(recalls);
    }

    std::vector<RecallAtKRow> rows;
    for (const auto& [domain, samples] : per_domain) {
        if (domain == "overall" && per_domain.size() == 2) continue;  // single domain only
        RecallAtKRow row;
        row.domain = domain;
        row.tasks = static_cast<int64_t>(samples.size());
        for (size_t ki = 0; ki < ks.size(); ++ki) {
            double sum = 0;
            for (const auto& r : samples) sum += r[ki];
            row.recall_pct.push_back(100.0 * sum / static_cast<double>(samples.size()));
        }
        rows.push_back(std::move(row));
    }
    // "overall" sorts after the real domains
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        bool ao = a.domain == "overall", bo = b.domain == "overall";
        if (ao != bo) return bo;
        return a.domain < b.domain;
    });
    return rows;
}

std::vector<EvalTask> load_tasks(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::vector<EvalTask> tasks;
    size_t start = 0, line_no = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        std::string line = text.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        start = end == std::string::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("task_id") ||
            !j.contains("question"))
            throw BadArgs("bad task record at " + path.string() + ":" + std::to_string(line_no));
        EvalTask t;
        t.task_id = j["task_id"].get<std::string>();
        t.question = j["question"].get<std::string>();
        t.domain = j.value("domain", std::string("all"));
        if (j.contains("gold_sql")) t.gold_sql = j["gold_sql"].get<std::string>();
        if (j.contains("ref_tables"))
            t.ref_tables = j["ref_tables"].get<std::vector<std::string>>();
        tasks.push_back(std::move(t));
    }
    return tasks;
}

static std::string pct_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string render_scores_csv(const std::vector<ScoreRow>& rows) {
    std::string out = "task_id,recall,precision,f1,steps\n";
    for (const auto& r : rows) {
        out += r.task_id + "," + format_ratio(r.scores.recall) + "," +
               format_ratio(r.scores.precision) + "," + format_ratio(r.scores.f1) + "," +
               std::to_string(r.steps) + "\n";
    }
    return out;
}

std::string render_recall_csv(const std::vector<RecallAtKRow>& rows, const std::vector<int>& ks) {
    std::string out = "domain,tasks";
    for (int k : ks) out += ",recall_at_" + std::to_string(k);
    out += "\n";
    for (const auto& r : rows) {
        out += r.domain + "," + std::to_string(r.tasks);
        for (double v : r.recall_pct) out += "," + pct_text(v);
        out += "\n";
    }
    return out;
}

std::string eval_summary_json(const std::vector<ScoreRow>& rows, const NoiseDistribution& noise,
                              const std::string& denominator_name,
                              const std::vector<std::string>& skipped) {
    double recall = 0, precision = 0, f1 = 0;
    for (const auto& r : rows) {
        recall += r.scores.recall;
        precision += r.scores.precision;
        f1 += r.scores.f1;
    }
    double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    json j;
    j["tasks"] = rows.size();
    j["macro"] = {{"recall", recall / n}, {"precision", precision / n}, {"f1", f1 / n}};
    json dist = json::object();
    for (const auto& [cat, pct] : noise.percentages) dist[cat] = pct;
    j["noise_distribution"] = dist;
    j["noise_total_selected"] = noise.total;
    j["recall_denominator"] = denominator_name;
    j["skipped"] = skipped;
    return j.dump(2) + "\n";
}

}  // namespace metalake
