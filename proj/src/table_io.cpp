#include "gplmbar/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace gplmbar {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::string list_ids(const std::vector<std::string>& ids) {
    std::ostringstream out;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) out << (k ? ", " : "") << ids[k];
    if (ids.size() > shown) out << ", ... (" << ids.size() << " total)";
    return out.str();
}

}  // namespace

std::optional<std::size_t> Table::find(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::string Table::where(std::size_t row, std::size_t column) const {
    std::ostringstream out;
    out << source << ':' << lines.at(row) << ": column '" << header.at(column) << "'";
    return out.str();
}

double Table::number(std::size_t row, std::size_t column) const {
    const std::string& field = rows.at(row).at(column);
    if (field.empty() || field == "NA" || field == "na" || field == "NaN" || field == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError(where(row, column) + ": '" + field + "' is not a number");
    }
    return v;
}

char delimiter_for(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" ? ',' : '\t';
}

Table parse_table(std::istream& in, const std::string& source, char delimiter) {
    Table t;
    t.source = source;
    std::string line;
    std::size_t number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line.front() == '#') continue;
        auto fields = split(line, delimiter);
        if (!have_header) {
            for (std::size_t c = 0; c < fields.size(); ++c) {
                if (fields[c].empty()) {
                    std::ostringstream msg;
                    msg << source << ':' << number << ": header field " << c + 1 << " is empty";
                    throw DataError(msg.str());
                }
                for (std::size_t d = 0; d < c; ++d) {
                    if (fields[d] == fields[c]) {
                        std::ostringstream msg;
                        msg << source << ':' << number << ": duplicate column '" << fields[c] << "'";
                        throw DataError(msg.str());
                    }
                }
            }
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            std::ostringstream msg;
            msg << source << ':' << number << ": expected " << t.header.size() << " fields, found " << fields.size();
            throw DataError(msg.str());
        }
        t.rows.push_back(std::move(fields));
        t.lines.push_back(number);
    }
    if (!have_header) throw DataError(source + ": no header row");
    return t;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    return parse_table(in, path.string(), delimiter_for(path));
}

Table join_by_id(const Table& left, const std::string& left_id, const Table& right, const std::string& right_id) {
    const auto li = left.find(left_id);
    const auto ri = right.find(right_id);
    if (!li) throw DataError(left.source + ": no id column '" + left_id + "'");
    if (!ri) throw DataError(right.source + ": no id column '" + right_id + "'");

    auto index = [](const Table& t, std::size_t col) {
        std::map<std::string, std::size_t> pos;
        for (std::size_t r = 0; r < t.size(); ++r) {
            const auto [it, fresh] = pos.emplace(t.rows[r][col], r);
            if (!fresh) throw DataError(t.where(r, col) + ": duplicate id '" + t.rows[r][col] + "'");
        }
        return pos;
    };
    const auto lpos = index(left, *li);
    const auto rpos = index(right, *ri);

    std::vector<std::string> only_left, only_right;
    for (std::size_t r = 0; r < left.size(); ++r)
        if (!rpos.count(left.rows[r][*li])) only_left.push_back(left.rows[r][*li]);
    for (std::size_t r = 0; r < right.size(); ++r)
        if (!lpos.count(right.rows[r][*ri])) only_right.push_back(right.rows[r][*ri]);
    if (!only_left.empty() || !only_right.empty()) {
        std::ostringstream msg;
        msg << "cannot join " << left.source << " and " << right.source << " on id";
        if (!only_left.empty()) msg << "; only in " << left.source << ": " << list_ids(only_left);
        if (!only_right.empty()) msg << "; only in " << right.source << ": " << list_ids(only_right);
        throw DataError(msg.str());
    }

    Table out;
    out.source = left.source + "+" + right.source;
    out.header = left.header;
    for (std::size_t c = 0; c < right.header.size(); ++c) {
        if (c == *ri) continue;
        if (left.find(right.header[c])) {
            throw DataError("column '" + right.header[c] + "' appears in both " + left.source + " and " + right.source);
        }
        out.header.push_back(right.header[c]);
    }
    for (std::size_t r = 0; r < left.size(); ++r) {
        auto row = left.rows[r];
        const auto& other = right.rows[rpos.at(left.rows[r][*li])];
        for (std::size_t c = 0; c < other.size(); ++c)
            if (c != *ri) row.push_back(other[c]);
        out.rows.push_back(std::move(row));
        out.lines.push_back(left.lines[r]);
    }
    return out;
}

std::string format_number(double value, int digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, value);
    return buf;
}

void write_table(const std::filesystem::path& path, const std::string& comment,
                 const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "# " << comment << '\n';
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "\t" : "") << columns[c];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "\t" : "") << row[c];
        out << '\n';
    }
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string render_aligned(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << row[c];
            if (c + 1 < row.size()) out << std::string(width[c] - row[c].size(), ' ');
        }
        out << '\n';
    };
    emit(columns);
    for (const auto& row : rows) emit(row);
    return out.str();
}

}  // namespace gplmbar
