#pragma once

// Command-line front end. Subcommands: simulate, path, fit, montecarlo,
// energy. Global flags: --seed, --threads, --out-dir, --tol, --max-iter.
//
// Exit codes: 0 on success, 2 on invalid usage, 1 on any other failure. On
// failure one line "error: <kind>: <message>" goes to `err`.

#include <iosfwd>

namespace mflm {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mflm
