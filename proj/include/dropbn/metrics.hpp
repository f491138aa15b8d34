#ifndef DROPBN_METRICS_HPP_
#define DROPBN_METRICS_HPP_

#include <fstream>
#include <string>
#include <vector>

namespace dropbn {

// CSV metrics writer. First line is the schema comment, second the header.
// Values are printed with a fixed repeatable format so identical runs
// produce identical bytes.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();

  void row(const std::vector<double>& values);
  void row_with_tag(const std::string& tag, const std::vector<double>& values);
  const std::string& path() const { return path_; }

  static std::string format(double v);

 private:
  std::string path_;
  std::ofstream out_;
  size_t columns_ = 0;
  bool tagged_ = false;
};

// Minimal reader for the plot tool: skips `#` comment lines, returns the
// header and rows as strings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace dropbn

#endif  // DROPBN_METRICS_HPP_
