#ifndef STG3NET_IO_HPP
#define STG3NET_IO_HPP

#include "stg3net/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stg3net::io {

/**
 * A delimited text table with one header row. The delimiter is a tab when the
 * header line contains one, otherwise a comma.
 */
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path);

double parse_double(const std::string& cell, const std::filesystem::path& where, std::size_t row);
int parse_int(const std::string& cell, const std::filesystem::path& where, std::size_t row);

/** Write a string exactly as given, LF line endings, binary mode. */
void write_text(const std::filesystem::path& path, const std::string& content);

/** Shortest round-trip decimal representation of a double. */
std::string format_double(double v);

/**
 * CSV with a header row. When `row_names` is non-empty it becomes the first
 * column, titled `row_title`.
 */
std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& col_names,
                          const std::vector<std::string>& row_names = {}, const std::string& row_title = "spot");

Matrix read_matrix_csv(const std::filesystem::path& path, bool first_column_is_name);

std::string labels_to_csv(const Labels& labels, const std::vector<std::string>& row_names, const std::string& title);
Labels read_labels_csv(const std::filesystem::path& path);

}

#endif
