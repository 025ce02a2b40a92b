#ifndef FIBCAST_TABLE_HPP
#define FIBCAST_TABLE_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace fibcast::table {

// A delimited text table: header row plus string cells. All fibcast file
// formats that are not JSON go through this (comma separator).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const; // throws SchemaError
    bool has_column(const std::string& name) const;
};

Table read_delimited(const std::filesystem::path& path, char sep = ',');
void write_delimited(const std::filesystem::path& path, const Table& t, char sep = ',');

// Shortest round-trip decimal representation; parsing it back recovers the
// exact double, which keeps emitted files byte-stable across reruns.
std::string format_double(double v);
double parse_double(const std::string& cell, const std::string& context);
long long parse_int(const std::string& cell, const std::string& context);

} // namespace fibcast::table

#endif
