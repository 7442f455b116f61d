#include "metalake/util.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "metalake/errors.hpp"

namespace metalake {

uint64_t Rng::next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t Rng::bounded(uint64_t n) {
    if (n == 0) return 0;
    uint64_t threshold = (0 - n) % n;
    for (;;) {
        uint64_t r = next();
        if (r >= threshold) return r % n;
    }
}

double Rng::next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
    if (k > n) k = n;
    std::vector<size_t> out;
    out.reserve(k);
    size_t needed = k;
    for (size_t i = 0; i < n && needed > 0; ++i) {
        // select with probability needed / (n - i)
        if (bounded(n - i) < needed) {
            out.push_back(i);
            --needed;
        }
    }
    return out;
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t derive_seed(uint64_t seed, std::string_view tag, std::string_view key) {
    uint64_t h = fnv1a64(tag);
    h ^= fnv1a64(key) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h ^= seed + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h ? h : 0x9E3779B97F4A7C15ULL;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string sanitize_identifier(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char ch : name) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            out.push_back('_');
        }
    }
    if (out.empty()) return "col";
    if (std::isdigit(static_cast<unsigned char>(out[0]))) out = "c_" + out;
    return out;
}

bool is_null_token(std::string_view raw) {
    std::string t = trim(raw);
    if (t.empty()) return true;
    return to_lower(t) == "null";
}

bool is_bool_literal(std::string_view raw) {
    std::string t = to_lower(trim(raw));
    return t == "true" || t == "false";
}

std::optional<int64_t> parse_int_strict(std::string_view raw) {
    std::string t = trim(raw);
    if (t.empty()) return std::nullopt;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') {
        ++first;
        if (first == last) return std::nullopt;
        if (*first == '-') return std::nullopt;
    }
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value, 10);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

namespace {

// sign? (digits ['.' digits?] | '.' digits) ([eE] sign? digits)?
bool looks_like_number(std::string_view t) {
    size_t i = 0;
    if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
    size_t int_digits = 0, frac_digits = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) { ++i; ++int_digits; }
    if (i < t.size() && t[i] == '.') {
        ++i;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) { ++i; ++frac_digits; }
    }
    if (int_digits + frac_digits == 0) return false;
    if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
        ++i;
        if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
        size_t exp_digits = 0;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) { ++i; ++exp_digits; }
        if (exp_digits == 0) return false;
    }
    return i == t.size();
}

}  // namespace

std::optional<double> parse_double_strict(std::string_view raw) {
    std::string t = trim(raw);
    if (!looks_like_number(t)) return std::nullopt;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;  // from_chars rejects leading '+'
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

bool is_date_literal(std::string_view raw) {
    std::string t = trim(raw);
    if (t.size() != 10 || t[4] != '-' || t[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    }
    int month = (t[5] - '0') * 10 + (t[6] - '0');
    int day = (t[8] - '0') * 10 + (t[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::string format_stat(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    if (!s.empty() && s.back() == '0') s.pop_back();
    return s;
}

std::string format_number(double v, bool integer_valued) {
    if (integer_valued) {
        return std::to_string(static_cast<long long>(v >= 0 ? v + 0.5 : v - 0.5));
    }
    return format_stat(v);
}

std::string format_ratio(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s = buf;
    if (s == "-0.0000") s = "0.0000";
    return s;
}

size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UnreadableFile(p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw UnreadableFile(p.string());
    return ss.str();
}

void write_text_file(const std::filesystem::path& p, std::string_view content) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw UnreadableFile(p.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw UnreadableFile(p.string());
}

std::string path_to_table_id(const std::filesystem::path& rel) {
    std::filesystem::path stemmed = rel;
    stemmed.replace_extension();
    std::string out;
    for (const auto& part : stemmed) {
        std::string s = part.string();
        if (s.empty() || s == "/") continue;
        if (!out.empty()) out += '.';
        out += s;
    }
    return out;
}

}  // namespace metalake
