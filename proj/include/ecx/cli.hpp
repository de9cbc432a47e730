#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ecx/config.hpp"

namespace ecx::cli {

/// Environment variable holding the default output root.
inline constexpr const char* kOutputRootVariable = "ECX_OUTPUT_ROOT";

/// Exit codes: 0 success, 1 computation failure, 2 input or configuration failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

void cmd_metrics(const RunConfig& config, std::ostream& log);
void cmd_regularize(const RunConfig& config, std::ostream& log);
void cmd_analyze(const RunConfig& config, std::ostream& log);
void cmd_backtest(const RunConfig& config, std::ostream& log);
void cmd_synth(const RunConfig& config, std::ostream& log);
void cmd_converge(const RunConfig& config, std::ostream& log);

}  // namespace ecx::cli
