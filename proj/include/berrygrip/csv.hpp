#pragma once

#include <string>
#include <vector>

namespace berrygrip {

// Formats with 9 significant digits, the precision used for every numeric
// value the tools write. Output is locale-independent.
std::string format_g9(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  bool has_column(const std::string& name) const { return column(name) >= 0; }
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

double parse_number(const std::string& cell);  // throws on malformed input

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::string str() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace berrygrip
