#pragma once

#include <string>
#include <vector>

#include "finsler/geometry.hpp"

namespace finsler {

/// Outcome of a sampled check: summary numbers, per-sample records, failures.
struct VerificationReport {
  std::string name;
  double tolerance = 0.0;
  bool passed = true;
  Json summary = Json::object();
  Json samples = Json::array();
  std::vector<std::string> failures;

  void fail(std::string why) {
    passed = false;
    failures.push_back(std::move(why));
  }

  /// Record the running maximum of a named quantity.
  void track_max(const std::string& key, double v) {
    if (!summary.contains(key) || v > summary[key].get<double>()) summary[key] = v;
  }
  void track_min(const std::string& key, double v) {
    if (!summary.contains(key) || v < summary[key].get<double>()) summary[key] = v;
  }

  Json to_json() const {
    return {{"name", name},       {"tolerance", tolerance}, {"passed", passed},
            {"summary", summary}, {"failures", failures},   {"samples", samples}};
  }
};

}  // namespace finsler
