// cli.hpp - command-line front end
//
// Subcommands: check, train, xval, eval, predict, gradcheck, synth,
// grid-layers. Failures print one JSON error record
//   {"error": {"code": "...", "message": "..."}}
// to the error stream and return a nonzero status (2 for usage errors).

#pragma once

#include <iosfwd>

namespace semsin::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semsin::cli
