#pragma once

#include <ostream>

namespace transfeat {

// Entry point of the `transfeat` tool. Subcommands: vocab, generate, score,
// eval, synth, bench. Returns the process exit code; diagnostics go to
// `err` prefixed with "transfeat: <ErrorKind>: ".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace transfeat
