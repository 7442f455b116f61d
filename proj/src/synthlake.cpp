#include "metalake/synthlake.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slug_value(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    for (char c : to_lower(trim(value))) {
        out.push_back((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ? c : '_');
    }
    return out;
}

// Counts are fixed by the rate, only positions are random. The epsilon keeps
// products like 0.10 * 30 from flooring to 2 when the double lands under 3.
static int64_t floor_count(double rate, int64_t n) {
    return static_cast<int64_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

static int64_t lifecycle_count(double rate, int64_t rows) {
    if (rows <= 0) return 0;
    return std::max<int64_t>(1, floor_count(rate, rows));
}

static std::string rate_text(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", rate);
    return buf;
}

std::optional<std::string> choose_partition_key(const TableEntry& entry,
                                                const TableProfile& profile,
                                                const SynthConfig& config,
                                                GenerationProvider* gen) {
    std::vector<std::string> eligible;
    for (const auto& col : entry.columns) {
        if (col.nullable) continue;
        if (col.name.size() >= 3 && col.name.ends_with("_id")) continue;
        const auto& cp = profile.get(col.name);
        if (cp.distinct_count < config.partition_min || cp.distinct_count > config.partition_max)
            continue;
        eligible.push_back(col.name);
    }
    if (eligible.empty()) return std::nullopt;
    if (gen) {
        GenerationRequest req;
        req.prompt = "Pick the best partitioning column for table " + entry.name +
                     ". Reply with exactly one name from this list: " + join(eligible, ", ") + "\n";
        try {
            std::string reply = trim(gen->generate(req));
            for (const auto& name : eligible) {
                if (reply == name || reply.find(name) != std::string::npos) return name;
            }
        } catch (const MetalakeError&) {
            // Provider trouble never blocks partitioning; fall through.
        }
    }
    return eligible.front();
}

std::vector<DerivedTable> partition_table(const std::string& base_stem, const CsvTable& data,
                                          const std::string& column, size_t column_index) {
    std::map<std::string, std::vector<size_t>> by_value;  // trimmed raw value -> row indices
    std::vector<size_t> null_rows;
    for (size_t i = 0; i < data.rows.size(); ++i) {
        const std::string& cell = data.rows[i][column_index];
        if (is_null_token(cell))
            null_rows.push_back(i);
        else
            by_value[trim(cell)].push_back(i);
    }

    std::set<std::string> used;
    if (!null_rows.empty()) used.insert("null");
    auto unique_slug = [&used](const std::string& s) {
        std::string candidate = s;
        for (int n = 2; used.count(candidate); ++n) candidate = s + "_" + std::to_string(n);
        used.insert(candidate);
        return candidate;
    };

    std::vector<DerivedTable> out;
    auto emit = [&](const std::string& slug, const std::string& value_display,
                    const std::vector<size_t>& rows) {
        DerivedTable d;
        d.stem = base_stem + "_" + column + "_" + slug;
        d.data.header = data.header;
        for (size_t i : rows) d.data.rows.push_back(data.rows[i]);
        d.lineage.operation = "PARTITION";
        d.lineage.params = {{"column", column}, {"value", value_display}};
        d.lineage.human_note =
            "Split partition of " + base_stem + " where " + column + " is " + value_display;
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    };
    for (const auto& [value, rows] : by_value) emit(unique_slug(slug_value(value)), value, rows);
    if (!null_rows.empty()) emit("null", "null", null_rows);
    return out;
}

static void append_sampled_rows(CsvTable& data, int64_t count, Rng& rng) {
    auto picks = rng.sample_indices(data.rows.size(), static_cast<size_t>(count));
    for (size_t i : picks) data.rows.push_back(data.rows[i]);
}

static CsvTable sampled_subset(const CsvTable& data, int64_t count, Rng& rng) {
    CsvTable out;
    out.header = data.header;
    for (size_t i : rng.sample_indices(data.rows.size(), static_cast<size_t>(count)))
        out.rows.push_back(data.rows[i]);
    return out;
}

static void mask_cells(CsvTable& data, const std::vector<size_t>& column_indices, int64_t cells,
                       Rng& rng) {
    size_t total = data.rows.size() * column_indices.size();
    for (size_t p : rng.sample_indices(total, static_cast<size_t>(cells))) {
        size_t row = p / column_indices.size();
        size_t col = column_indices[p % column_indices.size()];
        data.rows[row][col] = "";
    }
}

std::vector<DerivedTable> make_lifecycle_variants(const std::string& stem, const CsvTable& data,
                                                  const std::string& table_key,
                                                  const SynthConfig& config) {
    const int64_t rows = static_cast<int64_t>(data.rows.size());
    std::vector<DerivedTable> out;

    if (config.emit_prod) {
        DerivedTable d;
        d.stem = stem + "_prod";
        d.data = data;
        d.lineage.operation = "PROD";
        d.lineage.human_note = "Clean PROD version";
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }

    if (config.emit_stg) {
        DerivedTable d;
        d.stem = stem + "_stg";
        d.data = data;
        Rng coin(derive_seed(config.seed, "stg_branch", table_key));
        if ((coin.next() & 1) == 0) {
            int64_t count = lifecycle_count(config.rates.stg_dup, rows);
            Rng rng(derive_seed(config.seed, "stg_dup", table_key));
            append_sampled_rows(d.data, count, rng);
            d.lineage.operation = "STG_DUPROWS";
            d.lineage.params = {{"rate", rate_text(config.rates.stg_dup)},
                                {"count", std::to_string(count)}};
        } else {
            std::vector<size_t> all_cols(data.header.size());
            for (size_t i = 0; i < all_cols.size(); ++i) all_cols[i] = i;
            int64_t cells =
                floor_count(config.rates.stg_null, rows * static_cast<int64_t>(all_cols.size()));
            Rng rng(derive_seed(config.seed, "stg_mask", table_key));
            mask_cells(d.data, all_cols, cells, rng);
            d.lineage.operation = "STG_NULLS";
            d.lineage.params = {{"rate", rate_text(config.rates.stg_null)},
                                {"cells", std::to_string(cells)}};
        }
        d.lineage.human_note = "Dirty STG version";
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }

    if (config.emit_test) {
        DerivedTable d;
        d.stem = stem + "_test";
        int64_t count = lifecycle_count(config.rates.test_sample, rows);
        Rng rng(derive_seed(config.seed, "test_sample", table_key));
        d.data = sampled_subset(data, count, rng);
        d.lineage.operation = "TEST_SAMPLE";
        d.lineage.params = {{"rate", rate_text(config.rates.test_sample)},
                            {"count", std::to_string(count)}};
        d.lineage.human_note = "Sample TEST version";
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<DerivedTable> make_lowquality_variants(const std::string& stem, const CsvTable& data,
                                                   const std::vector<ColumnSpec>& columns,
                                                   const std::string& table_key,
                                                   const SynthConfig& config) {
    const int64_t rows = static_cast<int64_t>(data.rows.size());
    std::vector<DerivedTable> out;

    std::vector<size_t> id_cols, nonkey_cols;
    for (size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name.ends_with("_id"))
            id_cols.push_back(i);
        else
            nonkey_cols.push_back(i);
    }

    if (config.emit_broken_fk && !id_cols.empty()) {
        DerivedTable d;
        d.stem = stem + "_broken_fk";
        d.data = data;
        std::vector<std::string> names;
        for (size_t ci : id_cols) {
            const std::string& name = columns[ci].name;
            names.push_back(name);
            int64_t n_null = floor_count(config.rates.fk_null, rows);
            int64_t n_oob = floor_count(config.rates.fk_oob, rows);
            Rng rng(derive_seed(config.seed, "fk:" + name, table_key));
            auto picks = rng.sample_indices(data.rows.size(), static_cast<size_t>(n_null + n_oob));
            rng.shuffle(picks);
            for (size_t i = 0; i < picks.size(); ++i)
                d.data.rows[picks[i]][ci] =
                    i < static_cast<size_t>(n_null) ? "" : std::to_string(config.oob_value);
        }
        d.lineage.operation = "BROKEN_FK";
        d.lineage.params = {{"columns", join(names, ",")},
                            {"null_rate", rate_text(config.rates.fk_null)},
                            {"oob_rate", rate_text(config.rates.fk_oob)},
                            {"oob_value", std::to_string(config.oob_value)}};
        d.lineage.human_note = "Broke FK columns in " + join(names, ", ");
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }

    if (config.emit_dups) {
        DerivedTable d;
        d.stem = stem + "_dups";
        d.data = data;
        int64_t count = floor_count(config.rates.lowq_dup, rows);
        Rng rng(derive_seed(config.seed, "lowq_dup", table_key));
        append_sampled_rows(d.data, count, rng);
        d.lineage.operation = "DUPS";
        d.lineage.params = {{"rate", rate_text(config.rates.lowq_dup)},
                            {"count", std::to_string(count)}};
        d.lineage.human_note = "Duplicated rows to " + stem;
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }

    if (config.emit_nulls && !nonkey_cols.empty()) {
        DerivedTable d;
        d.stem = stem + "_nulls";
        d.data = data;
        int64_t cells =
            floor_count(config.rates.stg_null, rows * static_cast<int64_t>(nonkey_cols.size()));
        Rng rng(derive_seed(config.seed, "lowq_nulls", table_key));
        mask_cells(d.data, nonkey_cols, cells, rng);
        d.lineage.operation = "NULLS";
        d.lineage.params = {{"rate", rate_text(config.rates.stg_null)},
                            {"cells", std::to_string(cells)}};
        d.lineage.human_note = "Injected random NULLs into " + stem;
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }

    if (config.emit_subset) {
        DerivedTable d;
        d.stem = stem + "_subset";
        int64_t count = floor_count(config.rates.lowq_subset, rows);
        Rng rng(derive_seed(config.seed, "lowq_subset", table_key));
        d.data = sampled_subset(data, count, rng);
        d.lineage.operation = "SUBSET";
        d.lineage.params = {{"rate", rate_text(config.rates.lowq_subset)},
                            {"count", std::to_string(count)}};
        d.lineage.human_note = "A subset of " + stem;
        d.description = d.lineage.human_note;
        out.push_back(std::move(d));
    }
    return out;
}

SynthManifest build_messy_lake(const fs::path& clean_dir, const fs::path& out_dir,
                               const SynthConfig& config, GenerationProvider* gen) {
    CatalogStore clean = ingest_lake(clean_dir);
    fs::create_directories(metalake_dir(out_dir));

    SynthManifest manifest;
    LineageStore lineage;

    auto write_derived = [&](const fs::path& rel_dir, const std::string& base_id,
                             const DerivedTable& d) {
        fs::path rel = rel_dir / (d.stem + ".csv");
        write_csv_file(out_dir / rel, d.data);
        write_text_file(out_dir / rel_dir / (d.stem + ".txt"), d.description + "\n");
        LineageRecord rec = d.lineage;
        rec.derived_table_id = path_to_table_id(rel);
        rec.base_table_id = base_id;
        lineage[rec.derived_table_id] = rec;
    };

    for (const auto& [base_id, entry] : clean.entries) {
        fs::path rel(entry.source_path);
        fs::path rel_dir = rel.parent_path();
        fs::create_directories(out_dir / rel_dir);
        fs::copy_file(fs::path(clean.lake_root) / rel, out_dir / rel,
                      fs::copy_options::overwrite_existing);
        for (const char* ext : {".txt", ".md"}) {
            fs::path sidecar = fs::path(clean.lake_root) / rel_dir / (entry.name + ext);
            if (fs::exists(sidecar))
                fs::copy_file(sidecar, out_dir / rel_dir / (entry.name + ext),
                              fs::copy_options::overwrite_existing);
        }
        manifest.base++;

        CsvTable data = read_csv_file(fs::path(clean.lake_root) / rel);
        TableProfile profile = profile_table(clean, entry);

        // The base plus each partition sub-table all get lifecycle and
        // low-quality variants.
        struct Source {
            std::string stem;
            std::string table_id;
            CsvTable data;
        };
        std::vector<Source> sources;
        sources.push_back({entry.name, base_id, data});

        if (config.partitions) {
            if (auto column = choose_partition_key(entry, profile, config, gen)) {
                size_t ci = 0;
                while (ci < entry.columns.size() && entry.columns[ci].name != *column) ++ci;
                for (auto& part : partition_table(entry.name, data, *column, ci)) {
                    write_derived(rel_dir, base_id, part);
                    manifest.splits++;
                    sources.push_back({part.stem, path_to_table_id(rel_dir / (part.stem + ".csv")),
                                       std::move(part.data)});
                }
            }
        }

        for (const auto& src : sources) {
            for (const auto& d :
                 make_lifecycle_variants(src.stem, src.data, src.table_id, config)) {
                write_derived(rel_dir, src.table_id, d);
                manifest.duplicates++;
            }
            for (const auto& d : make_lowquality_variants(src.stem, src.data, entry.columns,
                                                          src.table_id, config)) {
                write_derived(rel_dir, src.table_id, d);
                manifest.low_quality++;
            }
        }
    }

    manifest.total = manifest.base + manifest.splits + manifest.duplicates + manifest.low_quality;
    save_lineage(lineage, lineage_path(out_dir));

    json m = {{"base", manifest.base},
              {"splits", manifest.splits},
              {"duplicates", manifest.duplicates},
              {"low_quality", manifest.low_quality},
              {"total", manifest.total}};
    write_text_file(metalake_dir(out_dir) / "manifest.json", m.dump(2) + "\n");
    return manifest;
}

void save_lineage(const LineageStore& store, const fs::path& path) {
    std::string out;
    for (const auto& [id, rec] : store) {
        json j = {{"derived_table_id", rec.derived_table_id},
                  {"base_table_id", rec.base_table_id},
                  {"operation", rec.operation},
                  {"params", rec.params},
                  {"human_note", rec.human_note}};
        out += j.dump() + "\n";
    }
    write_text_file(path, out);
}

LineageStore load_lineage(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UnknownLineage("cannot read " + path.string());
    LineageStore store;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw UnknownLineage("bad record at " + path.string() + ":" +
                                 std::to_string(line_no));
        LineageRecord rec;
        rec.derived_table_id = j.value("derived_table_id", "");
        rec.base_table_id = j.value("base_table_id", "");
        rec.operation = j.value("operation", "");
        rec.human_note = j.value("human_note", "");
        if (j.contains("params"))
            for (const auto& [k, v] : j["params"].items())
                rec.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
        if (rec.derived_table_id.empty())
            throw UnknownLineage("record without derived_table_id at " + path.string() + ":" +
                                 std::to_string(line_no));
        store[rec.derived_table_id] = rec;
    }
    return store;
}

fs::path lineage_path(const fs::path& lake_root) {
    return metalake_dir(lake_root) / "lineage.jsonl";
}

SynthConfig synth_config_from_json_file(const fs::path& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw BadArgs("synth config is not a JSON object: " + path.string());
    SynthConfig c;
    c.seed = j.value("seed", c.seed);
    c.oob_value = j.value("oob_value", c.oob_value);
    if (j.contains("partition_cardinality_range")) {
        auto& r = j["partition_cardinality_range"];
        c.partition_min = r.at(0).get<int64_t>();
        c.partition_max = r.at(1).get<int64_t>();
    }
    c.partitions = j.value("partitions", c.partitions);
    if (j.contains("rates")) {
        auto& r = j["rates"];
        c.rates.stg_dup = r.value("stg_dup", c.rates.stg_dup);
        c.rates.stg_null = r.value("stg_null", c.rates.stg_null);
        c.rates.test_sample = r.value("test_sample", c.rates.test_sample);
        c.rates.fk_null = r.value("fk_null", c.rates.fk_null);
        c.rates.fk_oob = r.value("fk_oob", c.rates.fk_oob);
        c.rates.lowq_dup = r.value("lowq_dup", c.rates.lowq_dup);
        c.rates.lowq_subset = r.value("lowq_subset", c.rates.lowq_subset);
    }
    if (j.contains("emit")) {
        auto& e = j["emit"];
        c.emit_prod = e.value("prod", c.emit_prod);
        c.emit_stg = e.value("stg", c.emit_stg);
        c.emit_test = e.value("test", c.emit_test);
        c.emit_dups = e.value("dups", c.emit_dups);
        c.emit_nulls = e.value("nulls", c.emit_nulls);
        c.emit_subset = e.value("subset", c.emit_subset);
        c.emit_broken_fk = e.value("broken_fk", c.emit_broken_fk);
    }
    return c;
}

}  // namespace metalake
