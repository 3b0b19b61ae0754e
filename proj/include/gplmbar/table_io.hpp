#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gplmbar {

/// Malformed input data. The message names the file, line and column.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Delimited text with a header row. Lines starting with '#' and blank lines are skipped.
struct Table {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based source line of each row.
    std::vector<std::size_t> lines;

    std::size_t size() const { return rows.size(); }
    std::optional<std::size_t> find(const std::string& name) const;
    /// Empty fields and "NA" read as NaN.
    double number(std::size_t row, std::size_t column) const;
    /// Location prefix for messages: "file:line: column 'name'".
    std::string where(std::size_t row, std::size_t column) const;
};

/// ',' for .csv files, otherwise tab.
char delimiter_for(const std::filesystem::path& path);

Table parse_table(std::istream& in, const std::string& source, char delimiter);
Table read_table(const std::filesystem::path& path);

/// Inner join on exact id match. Every id must appear exactly once on both sides,
/// otherwise DataError lists the offending ids. Rows follow the left table.
Table join_by_id(const Table& left, const std::string& left_id, const Table& right, const std::string& right_id);

/// %.{digits}g; non-finite values print as nan, inf, -inf.
std::string format_number(double value, int digits = 17);

/// Tab-delimited, first line `# <comment>`, then the header row.
void write_table(const std::filesystem::path& path, const std::string& comment,
                 const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows);

/// Space-aligned table for terminal output.
std::string render_aligned(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows);

}  // namespace gplmbar
