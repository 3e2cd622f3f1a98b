#pragma once

// CSV emission and ingestion. Reals render with 12 significant digits via
// "%.12g", which is idempotent under parse/re-render, so byte-identical
// output is a pure function of the data. Preamble lines carry the effective
// configuration as '#'-prefixed comments.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecodyn {

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> preamble;  // comment lines, stored without '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;  // trailing comment lines, without '#'

  void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }

  void write(std::ostream& os) const {
    for (const auto& line : preamble) os << "# " << line << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
      os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        os << (i ? "," : "") << row[i];
      os << "\n";
    }
    for (const auto& line : footer) os << "# " << line << "\n";
  }

  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static CsvTable parse(std::istream& is) {
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.front() == '#') {
        std::size_t start = 1;
        if (start < line.size() && line[start] == ' ') ++start;
        (have_header ? t.footer : t.preamble).push_back(line.substr(start));
        continue;
      }
      std::vector<std::string> cells;
      std::size_t pos = 0;
      for (;;) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
          cells.push_back(line.substr(pos));
          break;
        }
        cells.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
      }
      if (!have_header) {
        t.header = std::move(cells);
        have_header = true;
      } else {
        t.rows.push_back(std::move(cells));
      }
    }
    return t;
  }

  static CsvTable parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse(in);
  }
};

}  // namespace ecodyn
