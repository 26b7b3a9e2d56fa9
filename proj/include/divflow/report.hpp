#pragma once

#include "divflow/driver.hpp"

#include <string>
#include <vector>

namespace divflow {

struct JsonOptions {
  /// Wall-clock phases break byte-identical output, so they are opt-in.
  bool timings = false;
  bool flow = false;
  int indent = 2;
};

/// RunReport as a JSON document tagged "schema": "divflow/1".
std::string report_json(const RunReport& report, const JsonOptions& options = {});

/// One JSON object per line, one line per step.
std::string step_trace_jsonl(const std::vector<StepDiagnostics>& steps);

}  // namespace divflow
