#include "fibcast/table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fibcast/common.hpp"

namespace fibcast::table {
namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

} // namespace

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw SchemaError("missing column '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
    for (const auto& h : header) {
        if (h == name) return true;
    }
    return false;
}

Table read_delimited(const std::filesystem::path& path, char sep) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    Table t;
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty file '" + path.string() + "' (header row required)");
    }
    t.header = split_line(line, sep);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_line(line, sep);
        if (cells.size() != t.header.size()) {
            throw DataError("'" + path.string() + "' line " +
                            std::to_string(t.rows.size() + 2) + ": expected " +
                            std::to_string(t.header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void write_delimited(const std::filesystem::path& path, const Table& t, char sep) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    std::ostringstream buf;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) buf << sep;
        buf << t.header[i];
    }
    buf << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) buf << sep;
            buf << row[i];
        }
        buf << '\n';
    }
    out << buf.str();
    if (!out) {
        throw DataError("write failed for '" + path.string() + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& context) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || cell.empty()) {
        throw DataError(context + ": cannot parse number '" + cell + "'");
    }
    return v;
}

long long parse_int(const std::string& cell, const std::string& context) {
    long long v = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || cell.empty()) {
        throw DataError(context + ": cannot parse integer '" + cell + "'");
    }
    return v;
}

} // namespace fibcast::table
