#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcqa {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;

/// `dcqa <synth|run|eval|datagen|inspect> [options]`. Settings resolve as
/// flags > environment > --config JSON > defaults; commands that write an
/// output directory also write resolved_config.json (API keys redacted)
/// and a timings.jsonl sidecar holding everything time-dependent.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace dcqa
