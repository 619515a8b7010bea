#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace til {

// Minimal CSV emitter. Doubles are written with %.17g so files round-trip
// exactly and byte-identical reruns are byte-identical outputs.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : f_(std::fopen(path.c_str(), "wb")), ncols_(columns.size()) {
    if (!f_) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (size_t i = 0; i < columns.size(); ++i)
      std::fprintf(f_, "%s%s", columns[i].c_str(), i + 1 < columns.size() ? "," : "\n");
  }

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }

  void row(const std::vector<double>& values) {
    if (values.size() != ncols_) throw std::runtime_error("csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i)
      std::fprintf(f_, "%.17g%s", values[i], i + 1 < values.size() ? "," : "\n");
  }

  void close() {
    if (f_) {
      std::fclose(f_);
      f_ = nullptr;
    }
  }

private:
  std::FILE* f_;
  size_t ncols_;
};

}  // namespace til
