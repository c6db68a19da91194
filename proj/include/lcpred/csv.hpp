#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lcpred {

// Minimal comma-separated table: header row plus string cells. HighD files never
// quote fields, so neither do we.
class CsvTable {
public:
    static CsvTable read(const std::filesystem::path& path);
    static CsvTable parse(std::string_view text, std::string source_name);

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t row_count() const noexcept { return rows_.size(); }
    const std::string& source() const noexcept { return source_; }

    std::optional<std::size_t> find_column(std::string_view name) const;
    // Throws ParseError naming the missing column.
    std::size_t require_column(std::string_view name) const;

    const std::string& cell(std::size_t row, std::size_t column) const;

    // Numeric accessors throw ParseError with the 1-based file line and column name.
    double number(std::size_t row, std::size_t column) const;
    long long integer(std::size_t row, std::size_t column) const;

    // File line number (1-based, header = line 1) of a data row.
    std::size_t line_of(std::size_t row) const noexcept { return lines_[row]; }

private:
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
    std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::string> split(std::string_view text, char delimiter);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);
bool try_parse_double(std::string_view text, double& out);

// Writes to a temporary sibling and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Appends cells joined by commas and a trailing newline.
class CsvWriter {
public:
    CsvWriter& cell(std::string_view text);
    CsvWriter& cell(double value);
    CsvWriter& cell(long long value);
    CsvWriter& cell(int value) { return cell(static_cast<long long>(value)); }
    CsvWriter& cell(std::size_t value) { return cell(static_cast<long long>(value)); }
    CsvWriter& end_row();
    CsvWriter& comment(std::string_view text);
    CsvWriter& row(const std::vector<std::string>& cells);

    const std::string& str() const noexcept { return out_; }

private:
    std::string out_;
    bool row_open_ = false;
};

}  // namespace lcpred
