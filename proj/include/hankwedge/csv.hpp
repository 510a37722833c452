#pragma once
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal CSV support for the calibration and report formats: header row,
// comma separator, '.' decimal separator, no quoting needed by any schema
// used here.
namespace hankwedge::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return static_cast<int>(j);
    return -1;
  }
  const std::string& cell(std::size_t i, int j) const { return rows[i][j]; }
};

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim ASCII whitespace
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Table t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw std::runtime_error(path + ": row with " +
                                 std::to_string(fields.size()) +
                                 " fields, header has " +
                                 std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw std::runtime_error(path + ": missing header row");
  return t;
}

inline double to_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::runtime_error("bad numeric value '" + s + "' in " + context);
  }
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    out_.precision(17);  // doubles survive a write/read round trip
  }
  template <typename... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((out_ << (first ? "" : ",") << vals, first = false), ...);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace hankwedge::csv
