#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bdsde {

// Shortest round-trip decimal form; locale-independent, so CSV bodies are
// byte-stable across runs of the same binary.
std::string format_double(double v);

// CSV table writer: one '#' comment line carrying the schema id and build
// revision, then the column header, then rows.  Everything after the comment
// line is the deterministic body.
class CsvWriter {
 public:
  CsvWriter(std::string schema_id, std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  void write(const std::filesystem::path& path) const;

  // body (header row + data rows) without the leading comment
  std::string body() const;

 private:
  std::string schema_id_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// build revision baked in at configure time
const char* build_revision();

}  // namespace bdsde
