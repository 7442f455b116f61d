#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metalake {

// Deterministic RNG used for every random decision in the engine. We do not
// use <random> distributions: their outputs differ across standard libraries,
// and generated lakes must be byte-identical for a given seed everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next();
    // Unbiased value in [0, n). n == 0 returns 0.
    uint64_t bounded(uint64_t n);
    double next_double();  // [0, 1)

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), ascending order.
    std::vector<size_t> sample_indices(size_t n, size_t k);

private:
    uint64_t state_;
};

uint64_t fnv1a64(std::string_view s);

// Independent substream seed for (seed, tag, key). Substreams keyed by name
// stay stable when unrelated work is added or reordered.
uint64_t derive_seed(uint64_t seed, std::string_view tag, std::string_view key = {});

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> tokenize(std::string_view s);  // lowercased alnum runs
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// lowercase, non-alphanumeric -> '_', leading digit gets "c_" prefix,
// empty input becomes "col". Duplicate handling is the caller's job.
std::string sanitize_identifier(std::string_view name);

bool is_null_token(std::string_view raw);
bool is_bool_literal(std::string_view raw);
std::optional<int64_t> parse_int_strict(std::string_view raw);
std::optional<double> parse_double_strict(std::string_view raw);
bool is_date_literal(std::string_view raw);  // strict YYYY-MM-DD

// Statistic rendering: two decimals, then at most one trailing zero dropped,
// so 3 -> "3.0", 3.75 -> "3.75", 3.5 -> "3.5".
std::string format_stat(double v);
std::string format_number(double v, bool integer_valued);
std::string format_ratio(double v);  // fixed 4 decimals

size_t levenshtein(std::string_view a, std::string_view b);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, std::string_view content);

// Relative path -> table id: extension dropped, separators become '.'.
std::string path_to_table_id(const std::filesystem::path& rel);

}  // namespace metalake
