#pragma once

#include "otflow/metrics.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace otflow::cli {

/// Entry point behind the `otflow` binary; split out so tests can drive the
/// CLI in-process. `args` excludes the program name. Returns the process
/// exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses the machine-readable key=value block emitted by `eval` back into a
/// MetricReport (round-trip contract).
MetricReport parse_eval_block(const std::string& text);

}  // namespace otflow::cli
