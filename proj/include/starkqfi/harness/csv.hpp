#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace starkqfi::harness {

using Cell = std::variant<std::string, double, std::int64_t, bool>;

/// %.17g, round-trips every double.
std::string format_number(double v);
std::string format_cell(const Cell& c);

/// Comma separated, '\n' line endings, header first.
class CsvWriter {
public:
    /// append=true keeps existing rows when the header matches.
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header, bool append = false);
    void row(const std::vector<Cell>& cells);
    void flush();

private:
    std::filesystem::path path_;
    std::vector<std::string> header_;
    std::string buffer_;
    bool append_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static CsvTable read(const std::filesystem::path& path);
    std::size_t column(const std::string& name) const;  ///< throws ConfigError if absent
    bool has_column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
};

}  // namespace starkqfi::harness
