#include "stg3net/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace stg3net::io {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, delim)) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == delim) {
        out.emplace_back();
    }
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    Table table;
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty file: " + path.string());
    }
    strip_cr(line);
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    table.header = split(line, delim);
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        auto cells = split(line, delim);
        if (cells.size() != table.header.size()) {
            throw DataError(path.string() + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                            std::to_string(cells.size()) + " cells, header has " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

double parse_double(const std::string& cell, const std::filesystem::path& where, std::size_t row) {
    double v = 0.0;
    const auto* begin = cell.data();
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError(where.string() + ": row " + std::to_string(row) + ": not a number: '" + cell + "'");
    }
    return v;
}

int parse_int(const std::string& cell, const std::filesystem::path& where, std::size_t row) {
    int v = 0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw DataError(where.string() + ": row " + std::to_string(row) + ": not an integer: '" + cell + "'");
    }
    return v;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << content;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& col_names,
                          const std::vector<std::string>& row_names, const std::string& row_title) {
    std::string out;
    bool first = true;
    if (!row_names.empty()) {
        out += row_title;
        first = false;
    }
    for (const auto& c : col_names) {
        if (!first) {
            out += ',';
        }
        out += c;
        first = false;
    }
    out += '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        if (!row_names.empty()) {
            out += row_names[static_cast<std::size_t>(i)];
            out += ',';
        }
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) {
                out += ',';
            }
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path, bool first_column_is_name) {
    auto table = read_table(path);
    const std::size_t skip = first_column_is_name ? 1 : 0;
    if (table.header.size() <= skip) {
        throw DataError(path.string() + ": no value columns");
    }
    const auto cols = static_cast<Index>(table.header.size() - skip);
    Matrix m(static_cast<Index>(table.rows.size()), cols);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        for (Index j = 0; j < cols; ++j) {
            m(static_cast<Index>(i), j) = parse_double(table.rows[i][static_cast<std::size_t>(j) + skip], path, i + 1);
        }
    }
    return m;
}

std::string labels_to_csv(const Labels& labels, const std::vector<std::string>& row_names, const std::string& title) {
    std::string out = "spot," + title + "\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += row_names.empty() ? std::to_string(i) : row_names[i];
        out += ',';
        out += std::to_string(labels[i]);
        out += '\n';
    }
    return out;
}

Labels read_labels_csv(const std::filesystem::path& path) {
    auto table = read_table(path);
    if (table.header.empty()) {
        throw DataError(path.string() + ": no columns");
    }
    Labels labels;
    labels.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        labels.push_back(parse_int(table.rows[i].back(), path, i + 1));
    }
    return labels;
}

}
