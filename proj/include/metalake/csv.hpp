#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace metalake {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // padded/truncated to header width

    bool operator==(const CsvTable&) const = default;
};

// Quoted fields, "" escapes, CRLF or LF, UTF-8 BOM stripped. Short rows are
// padded with empty cells, long rows truncated to the header width. Blank
// lines are skipped. Throws UnreadableFile when there is no header row.
CsvTable read_csv_text(std::string_view text, const std::string& origin = "<text>");
CsvTable read_csv_file(const std::filesystem::path& p);

// Minimal quoting: only fields containing a comma, quote, or newline.
std::string write_csv_text(const CsvTable& t);
void write_csv_file(const std::filesystem::path& p, const CsvTable& t);

}  // namespace metalake
