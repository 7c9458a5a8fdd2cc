#include "starkqfi/harness/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "starkqfi/errors.hpp"

namespace starkqfi::harness {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_cell(const Cell& c) {
    struct {
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(double d) const { return format_number(d); }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    } visit;
    return std::visit(visit, c);
}

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ',';
        out += parts[i];
    }
    return out;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header, bool append)
    : path_(path), header_(std::move(header)), append_(append) {
    bool fresh = true;
    if (append_ && std::filesystem::exists(path_)) {
        const auto existing = CsvTable::read(path_);
        if (existing.header != header_)
            throw Error("cannot append to " + path_.string() + ": header differs");
        fresh = false;
    }
    if (fresh) {
        append_ = false;
        buffer_ = join(header_) + "\n";
    }
}

void CsvWriter::row(const std::vector<Cell>& cells) {
    if (cells.size() != header_.size()) throw Error("csv row width does not match header of " + path_.string());
    std::vector<std::string> parts;
    parts.reserve(cells.size());
    for (const auto& c : cells) parts.push_back(format_cell(c));
    buffer_ += join(parts) + "\n";
}

void CsvWriter::flush() {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | (append_ ? std::ios::app : std::ios::trunc));
    if (!out) throw Error("cannot write " + path_.string());
    out << buffer_;
    if (!out) throw Error("write failed for " + path_.string());
    buffer_.clear();
    append_ = true;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ConfigError(path.string() + ": row " + std::to_string(t.rows.size() + 1) + " has wrong width");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& s = rows.at(row).at(col);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + s + "' in column '" + header.at(col) + "' is not a number");
}

}  // namespace starkqfi::harness
