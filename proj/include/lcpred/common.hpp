#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lcpred {

// Base for all recoverable pipeline failures. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

// CSV/metadata parse failure carrying the offending location.
class ParseError : public DataError {
public:
    ParseError(std::string file, std::size_t row, std::string column, const std::string& what)
        : DataError(format(file, row, column, what)), file_(std::move(file)), row_(row), column_(std::move(column)) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    static std::string format(const std::string& file, std::size_t row, const std::string& column,
                              const std::string& what) {
        std::string msg = file;
        if (row > 0) {
            msg += ":" + std::to_string(row);
        }
        if (!column.empty()) {
            msg += " [" + column + "]";
        }
        return msg + ": " + what;
    }

    std::string file_;
    std::size_t row_;
    std::string column_;
};

// Invalid configuration or argument combination (exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Side { left, right };
enum class Label { lane_keep = 0, lane_change = 1 };
enum class DrivingStyle { aggressive = 0, general = 1, cautious = 2 };

inline constexpr int kStyleCount = 3;

std::string_view to_string(Side side) noexcept;
std::string_view to_string(Label label) noexcept;
std::string_view to_string(DrivingStyle style) noexcept;
Side parse_side(std::string_view text);
Label parse_label(std::string_view text);
DrivingStyle parse_style(std::string_view text);

inline Side opposite(Side side) noexcept { return side == Side::left ? Side::right : Side::left; }

// 64-bit FNV-1a; stable across platforms, used for provenance hashes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t value);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seeds for pipeline stages are derived from the single run seed by stage name.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace lcpred
