#include "consync/text_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "consync/errors.hpp"

namespace consync {

std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

int parse_int(const std::string& token, const std::string& where) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || token.empty()) {
    throw InputError(where + ": expected an integer, got '" + token + "'");
  }
  return v;
}

double parse_double(const std::string& token, const std::string& where) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (token.empty() || end != begin + token.size() || errno == ERANGE) {
    throw InputError(where + ": expected a number, got '" + token + "'");
  }
  return v;
}

std::string format_double(double v, int digits) {
  if (v == 0.0) v = 0.0;  // fold -0 so outputs are stable
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(strip_comment(line));
    if (toks.empty()) continue;
    std::string joined;
    for (const auto& t : toks) joined += t;
    const auto eq = joined.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == joined.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected key=value");
    }
    kv[joined.substr(0, eq)] = joined.substr(eq + 1);
  }
  return kv;
}

Eigen::MatrixXd read_matrix_rows(const std::vector<std::vector<double>>& rows,
                                 const std::string& what) {
  if (rows.empty()) throw InputError(what + ": no rows");
  const auto cols = rows.front().size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw InputError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return M;
}

Eigen::VectorXd read_vector(std::istream& in) {
  std::vector<double> vals;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = strip_comment(line);
    std::replace(s.begin(), s.end(), ',', ' ');
    for (const auto& tok : tokenize(s)) {
      vals.push_back(parse_double(tok, "vector line " + std::to_string(line_no)));
    }
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Eigen::VectorXd read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_vector(in);
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& M, int digits) {
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      out << (c ? " " : "") << format_double(M(r, c), digits);
    }
    out << "\n";
  }
}

}  // namespace consync
