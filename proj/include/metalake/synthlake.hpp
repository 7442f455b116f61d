#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metalake/catalog.hpp"
#include "metalake/csv.hpp"
#include "metalake/profiler.hpp"
#include "metalake/providers.hpp"

namespace metalake {

struct LineageRecord {
    std::string derived_table_id;
    std::string base_table_id;
    std::string operation;  // PARTITION PROD STG_DUPROWS STG_NULLS TEST_SAMPLE BROKEN_FK NULLS DUPS SUBSET
    std::map<std::string, std::string> params;
    std::string human_note;

    bool operator==(const LineageRecord&) const = default;
};

using LineageStore = std::map<std::string, LineageRecord>;  // derived_table_id -> record

struct SynthRates {
    double stg_dup = 0.10;
    double stg_null = 0.05;
    double test_sample = 0.10;
    double fk_null = 0.10;
    double fk_oob = 0.05;
    double lowq_dup = 0.10;
    double lowq_subset = 0.20;
};

struct SynthConfig {
    uint64_t seed = 42;
    SynthRates rates;
    int64_t oob_value = 99999999;
    int64_t partition_min = 2;
    int64_t partition_max = 12;
    bool partitions = true;
    bool emit_prod = true, emit_stg = true, emit_test = true;
    bool emit_dups = true, emit_nulls = true, emit_subset = true, emit_broken_fk = true;
};

struct SynthManifest {
    int64_t base = 0;
    int64_t splits = 0;
    int64_t duplicates = 0;   // lifecycle variants
    int64_t low_quality = 0;
    int64_t total = 0;
};

// One derived table before it is written: file stem, rows, provenance.
struct DerivedTable {
    std::string stem;  // file name without extension
    CsvTable data;
    LineageRecord lineage;  // derived/base ids filled by the pipeline
    std::string description;
};

std::string slug_value(const std::string& value);

// First schema-order column that is non-nullable, not `_id`-suffixed, with
// distinct count inside the configured range. A provider, when given, picks
// among the eligible columns only.
std::optional<std::string> choose_partition_key(const TableEntry& entry,
                                                const TableProfile& profile,
                                                const SynthConfig& config,
                                                GenerationProvider* gen = nullptr);

std::vector<DerivedTable> partition_table(const std::string& base_stem, const CsvTable& data,
                                          const std::string& column, size_t column_index);

std::vector<DerivedTable> make_lifecycle_variants(const std::string& stem, const CsvTable& data,
                                                  const std::string& table_key,
                                                  const SynthConfig& config);

std::vector<DerivedTable> make_lowquality_variants(const std::string& stem, const CsvTable& data,
                                                   const std::vector<ColumnSpec>& columns,
                                                   const std::string& table_key,
                                                   const SynthConfig& config);

SynthManifest build_messy_lake(const std::filesystem::path& clean_dir,
                               const std::filesystem::path& out_dir, const SynthConfig& config,
                               GenerationProvider* gen = nullptr);

void save_lineage(const LineageStore& store, const std::filesystem::path& path);
LineageStore load_lineage(const std::filesystem::path& path);
std::filesystem::path lineage_path(const std::filesystem::path& lake_root);

SynthConfig synth_config_from_json_file(const std::filesystem::path& path);

}  // namespace metalake
