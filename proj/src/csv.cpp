#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace bdsde {

#ifndef BDSDE_GIT_REVISION
#define BDSDE_GIT_REVISION "unknown"
#endif

const char* build_revision() { return BDSDE_GIT_REVISION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::string schema_id, std::vector<std::string> columns)
    : schema_id_(std::move(schema_id)), columns_(std::move(columns)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw std::invalid_argument("csv: row width does not match column count");
  rows_.push_back(std::move(cells));
}

std::string CsvWriter::body() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i > 0) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("csv: cannot open " + path.string() + " for writing");
  file << "# " << schema_id_ << " rev=" << build_revision() << "\n" << body();
  if (!file) throw std::runtime_error("csv: write failed for " + path.string());
}

}  // namespace bdsde
