#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcbnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
// A mathematical guarantee did not hold (e.g. verify found error >= epsilon).
inline constexpr int kExitGuarantee = 2;

// Subcommands: construct-binary, construct-lipschitz, binarize-output, eval,
// verify, counterexample, bench. args excludes the program name. Summaries go
// to out as key=value lines, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fcbnn::cli
