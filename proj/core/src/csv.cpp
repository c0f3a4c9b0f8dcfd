#include "kcs/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace kcs::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error("csv: missing column '" + std::string(name) + "'");
}

Table read(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    for (auto& f : fields) f = trim(std::move(f));
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw Error("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                  " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error("csv: empty input");
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open '" + path + "'");
  return read(in);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view field) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw Error("csv: '" + std::string(field) + "' is not a number");
  return v;
}

void write_points(std::ostream& out, const Points& x, const Vector* y) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << 'x' << j;
  if (y) out << (x.cols() ? "," : "") << 'y';
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << format_double(x(i, j));
    if (y) out << (x.cols() ? "," : "") << format_double((*y)[i]);
    out << '\n';
  }
}

void write_points_file(const std::string& path, const Points& x, const Vector* y) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("csv: cannot write '" + path + "'");
  write_points(out, x, y);
}

PointsWithResponse read_points_file(const std::string& path) {
  const Table t = read_file(path);
  std::vector<std::size_t> xcols;
  std::optional<std::size_t> ycol;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    const auto& h = t.header[j];
    if (h == "y")
      ycol = j;
    else if (h.size() > 1 && h[0] == 'x' && h.find_first_not_of("0123456789", 1) == std::string::npos)
      xcols.push_back(j);
  }
  if (xcols.empty())
    for (std::size_t j = 0; j < t.header.size(); ++j)
      if (!ycol || j != *ycol) xcols.push_back(j);
  if (xcols.empty()) throw Error("csv: '" + path + "' has no covariate columns");

  PointsWithResponse out;
  out.x.resize(Eigen::Index(t.rows.size()), Eigen::Index(xcols.size()));
  if (ycol) out.y = Vector(Eigen::Index(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < xcols.size(); ++j) {
      try {
        out.x(Eigen::Index(i), Eigen::Index(j)) = parse_double(t.rows[i][xcols[j]]);
      } catch (const Error&) {
        throw Error("csv: '" + path + "' row " + std::to_string(i + 1) + " column '" + t.header[xcols[j]] +
                    "' is not numeric");
      }
    }
    if (ycol) (*out.y)[Eigen::Index(i)] = parse_double(t.rows[i][*ycol]);
  }
  return out;
}

}  // namespace kcs::csv
