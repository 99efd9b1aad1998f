#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "imr/errors.hpp"
#include "imr/series.hpp"

namespace imr {

/// A CSV file raised by one of the tools reading or writing malformed data.
class CsvError : public InputError {
public:
    using InputError::InputError;
};

/**
 * @brief In-memory form of the tool CSV schema:
 * header `index,value[,label][,truth]`, 1-based ascending index, decimal
 * point, empty label cell = unlabeled, UTF-8.
 */
struct SeriesTable {
    std::vector<double> value;
    std::vector<std::optional<double>> label; ///< meaningful iff has_label
    std::vector<double> truth;                ///< meaningful iff has_truth
    bool has_label = false;
    bool has_truth = false;

    std::size_t rows() const { return value.size(); }

    TimeSeries values_series() const { return TimeSeries(value); }

    LabeledSeries labels_series() const {
        LabeledSeries out;
        if (has_label) {
            for (std::size_t i = 0; i < label.size(); ++i) {
                if (label[i].has_value()) {
                    out.set(i + 1, *label[i]);
                }
            }
        }
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

inline double parse_double(const std::string& cell, std::size_t line_no,
                           const char* column) {
    double out = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw CsvError("line " + std::to_string(line_no) + ": cannot parse " +
                       column + " value '" + cell + "'");
    }
    return out;
}

inline std::size_t parse_index(const std::string& cell, std::size_t line_no) {
    std::size_t out = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
        throw CsvError("line " + std::to_string(line_no) +
                       ": cannot parse index '" + cell + "'");
    }
    return out;
}

/// Shortest round-trip decimal form; locale-independent and stable across
/// runs, which the byte-identical output guarantee depends on.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw CsvError("cannot format value");
    }
    return std::string(buf, ptr);
}

} // namespace detail

inline SeriesTable read_series_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw CsvError("empty input: expected header 'index,value[,label][,truth]'");
    }
    const std::vector<std::string> header = detail::split_line(line);
    if (header.size() < 2 || header[0] != "index" || header[1] != "value") {
        throw CsvError("header must start with 'index,value', got '" + line + "'");
    }
    SeriesTable table;
    std::size_t col = 2;
    if (col < header.size() && header[col] == "label") {
        table.has_label = true;
        ++col;
    }
    if (col < header.size() && header[col] == "truth") {
        table.has_truth = true;
        ++col;
    }
    if (col != header.size()) {
        throw CsvError("unrecognized header column '" + header[col] + "'");
    }
    const std::size_t expected_cells = 2 + (table.has_label ? 1 : 0) +
                                       (table.has_truth ? 1 : 0);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
            continue;
        }
        const std::vector<std::string> cells = detail::split_line(line);
        if (cells.size() != expected_cells) {
            throw CsvError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(expected_cells) + " cells, got " +
                           std::to_string(cells.size()));
        }
        const std::size_t index = detail::parse_index(cells[0], line_no);
        if (index != table.rows() + 1) {
            throw CsvError("line " + std::to_string(line_no) +
                           ": index must ascend from 1, expected " +
                           std::to_string(table.rows() + 1) + ", got " +
                           std::to_string(index));
        }
        table.value.push_back(detail::parse_double(cells[1], line_no, "value"));
        std::size_t cell = 2;
        if (table.has_label) {
            if (cells[cell].empty()) {
                table.label.push_back(std::nullopt);
            } else {
                table.label.push_back(detail::parse_double(cells[cell], line_no, "label"));
            }
            ++cell;
        }
        if (table.has_truth) {
            table.truth.push_back(detail::parse_double(cells[cell], line_no, "truth"));
        }
    }
    if (table.rows() == 0) {
        throw CsvError("no data rows");
    }
    return table;
}

inline SeriesTable read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CsvError("cannot open '" + path.string() + "' for reading");
    }
    return read_series_csv(in);
}

inline void write_series_csv(std::ostream& out, const SeriesTable& table) {
    out << "index,value";
    if (table.has_label) {
        out << ",label";
    }
    if (table.has_truth) {
        out << ",truth";
    }
    out << "\n";
    for (std::size_t i = 0; i < table.rows(); ++i) {
        out << (i + 1) << ',' << detail::format_double(table.value[i]);
        if (table.has_label) {
            out << ',';
            if (table.label[i].has_value()) {
                out << detail::format_double(*table.label[i]);
            }
        }
        if (table.has_truth) {
            out << ',' << detail::format_double(table.truth[i]);
        }
        out << "\n";
    }
}

/// Write via a temporary in the same directory and rename into place, so a
/// failure mid-write never leaves a partial output file.
inline void write_series_csv(const std::filesystem::path& path, const SeriesTable& table) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CsvError("cannot open '" + tmp.string() + "' for writing");
        }
        write_series_csv(out, table);
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw CsvError("failed writing '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

} // namespace imr
