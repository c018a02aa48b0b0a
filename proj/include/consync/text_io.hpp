#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace consync {

// Small helpers shared by the text file readers and CSV writers.

std::string strip_comment(const std::string& line);
std::vector<std::string> tokenize(const std::string& line);

int parse_int(const std::string& token, const std::string& where);
double parse_double(const std::string& token, const std::string& where);

// Shortest "%.{digits}g" rendering; used for every number written to a data file.
std::string format_double(double v, int digits = 12);

// `key=value` lines (blank lines and `#` comments ignored).
std::map<std::string, std::string> read_key_values(std::istream& in);

// Whitespace-separated numeric rows until a blank line or EOF.
Eigen::MatrixXd read_matrix_rows(const std::vector<std::vector<double>>& rows,
                                 const std::string& what);

// Reads a vector of decimals separated by whitespace, commas or newlines.
Eigen::VectorXd read_vector(std::istream& in);
Eigen::VectorXd read_vector_file(const std::string& path);

void write_matrix(std::ostream& out, const Eigen::MatrixXd& M, int digits = 12);

}  // namespace consync
