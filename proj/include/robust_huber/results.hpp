#pragma once

#include <map>
#include <string>
#include <vector>

namespace rh {

struct ResultRow {
  std::string scenario;
  std::map<std::string, double> point;
  int trial = 0;
  std::map<std::string, double> metrics;
  long long iterations = 0;
  std::map<std::string, bool> flags;
  double wall_ms = 0.0;
  std::string error;  // empty unless the trial raised

  bool operator==(const ResultRow&) const = default;
};

// Column order: scenario, point params, trial, metrics, iterations, flags, wall_ms, error.
// Names inside each group are sorted; floats use 17 significant digits.
std::string format_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);

std::string format_double(double v);

}  // namespace rh
