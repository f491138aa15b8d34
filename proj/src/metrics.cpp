#include "dropbn/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "dropbn/errors.hpp"

namespace dropbn {

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : path_(path) {
  std::error_code ec;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  out_.open(path);
  require(out_.good(), ErrorCode::kIo, "cannot open csv for writing: " + path);
  out_ << "# schema=1\n";
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns[i];
  }
  out_ << "\n";
  columns_ = columns.size();
  tagged_ = !columns.empty() && columns[0] == "tag";
}

CsvWriter::~CsvWriter() = default;

std::string CsvWriter::format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void CsvWriter::row(const std::vector<double>& values) {
  require(values.size() == columns_, ErrorCode::kInvalidArgument,
          "csv row width mismatch for " + path_);
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ",";
    out_ << format(values[i]);
  }
  out_ << "\n";
  out_.flush();
}

void CsvWriter::row_with_tag(const std::string& tag,
                             const std::vector<double>& values) {
  require(tagged_ && values.size() + 1 == columns_, ErrorCode::kInvalidArgument,
          "csv tagged row width mismatch for " + path_);
  out_ << tag;
  for (double v : values) out_ << "," << format(v);
  out_ << "\n";
  out_.flush();
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open csv: " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.header = cells;
      have_header = true;
    } else {
      table.rows.push_back(cells);
    }
  }
  require(have_header, ErrorCode::kIo, "csv has no header: " + path);
  return table;
}

}  // namespace dropbn
