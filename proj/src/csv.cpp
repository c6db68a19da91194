#include "lcpred/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "lcpred/common.hpp"

namespace lcpred {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

}  // namespace

std::vector<std::string> split(std::string_view text, char delimiter) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(delimiter, start);
        out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ParseError(path.string(), 0, "", "file does not exist");
    }
    return parse(read_file(path), path.string());
}

CsvTable CsvTable::parse(std::string_view text, std::string source_name) {
    CsvTable table;
    table.source_ = std::move(source_name);
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool have_header = false;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        auto cells = split(line, ',');
        if (!have_header) {
            table.header_ = std::move(cells);
            for (std::size_t i = 0; i < table.header_.size(); ++i) {
                table.index_.emplace(table.header_[i], i);
            }
            have_header = true;
        } else {
            if (cells.size() != table.header_.size()) {
                throw ParseError(table.source_, line_no, "",
                                 "expected " + std::to_string(table.header_.size()) + " fields, found " +
                                     std::to_string(cells.size()));
            }
            table.rows_.push_back(std::move(cells));
            table.lines_.push_back(line_no);
        }
        if (end == text.size()) break;
    }
    if (!have_header) {
        throw ParseError(table.source_, 0, "", "empty file (no header row)");
    }
    return table;
}

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t CsvTable::require_column(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    throw ParseError(source_, 1, std::string(name), "missing required column");
}

const std::string& CsvTable::cell(std::size_t row, std::size_t column) const { return rows_.at(row).at(column); }

double CsvTable::number(std::size_t row, std::size_t column) const {
    const auto& text = cell(row, column);
    double value = 0.0;
    if (text.empty() || !try_parse_double(text, value)) {
        throw ParseError(source_, lines_[row], header_[column], "non-numeric value '" + text + "'");
    }
    return value;
}

long long CsvTable::integer(std::size_t row, std::size_t column) const {
    const auto& text = cell(row, column);
    long long value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        // HighD occasionally writes integral columns as "5.0".
        double d = 0.0;
        if (!text.empty() && try_parse_double(text, d) && d == static_cast<double>(static_cast<long long>(d))) {
            return static_cast<long long>(d);
        }
        throw ParseError(source_, lines_[row], header_[column], "non-integer value '" + text + "'");
    }
    return value;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

bool try_parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return !text.empty() && ec == std::errc() && ptr == last;
}

double parse_double(std::string_view text) {
    double v = 0.0;
    if (!try_parse_double(text, v)) throw DataError("not a number: '" + std::string(text) + "'");
    return v;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvWriter& CsvWriter::cell(std::string_view text) {
    if (row_open_) out_ += ',';
    out_ += text;
    row_open_ = true;
    return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(std::string_view(format_double(value))); }

CsvWriter& CsvWriter::cell(long long value) { return cell(std::string_view(std::to_string(value))); }

CsvWriter& CsvWriter::end_row() {
    out_ += '\n';
    row_open_ = false;
    return *this;
}

CsvWriter& CsvWriter::comment(std::string_view text) {
    out_ += "# ";
    out_ += text;
    out_ += '\n';
    return *this;
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    for (const auto& c : cells) cell(std::string_view(c));
    return end_row();
}

}  // namespace lcpred
