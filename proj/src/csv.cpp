#include "metalake/csv.hpp"

#include "metalake/errors.hpp"
#include "metalake/util.hpp"

namespace metalake {

namespace {

std::vector<std::vector<std::string>> parse_records(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = record.size() == 1 && record[0].empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
    };

    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field.push_back(c);
                ++i;
            }
        } else if (c == '"' && !field_started && field.empty()) {
            in_quotes = true;
            field_started = true;
            ++i;
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\r') {
            end_record();
            i += (i + 1 < text.size() && text[i + 1] == '\n') ? 2 : 1;
        } else if (c == '\n') {
            end_record();
            ++i;
        } else {
            field.push_back(c);
            field_started = true;
            ++i;
        }
    }
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

}  // namespace

CsvTable read_csv_text(std::string_view text, const std::string& origin) {
    auto records = parse_records(text);
    if (records.empty()) throw UnreadableFile("no header row in " + origin);

    CsvTable t;
    t.header = std::move(records[0]);
    const size_t width = t.header.size();
    t.rows.reserve(records.size() - 1);
    for (size_t r = 1; r < records.size(); ++r) {
        auto& rec = records[r];
        rec.resize(width);
        t.rows.push_back(std::move(rec));
    }
    return t;
}

CsvTable read_csv_file(const std::filesystem::path& p) {
    std::string text = read_text_file(p);
    if (text.empty()) throw UnreadableFile("empty file " + p.string());
    return read_csv_text(text, p.string());
}

namespace {

void write_field(std::string& out, const std::string& f) {
    bool need_quotes = f.find_first_of(",\"\r\n") != std::string::npos;
    if (!need_quotes) {
        out += f;
        return;
    }
    out.push_back('"');
    for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

std::string write_csv_text(const CsvTable& t) {
    std::string out;
    auto write_row = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            write_field(out, row[i]);
        }
        out.push_back('\n');
    };
    write_row(t.header);
    for (const auto& row : t.rows) write_row(row);
    return out;
}

void write_csv_file(const std::filesystem::path& p, const CsvTable& t) {
    write_text_file(p, write_csv_text(t));
}

}  // namespace metalake
