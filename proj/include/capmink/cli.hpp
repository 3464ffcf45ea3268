#ifndef CAPMINK_CLI_HPP
#define CAPMINK_CLI_HPP

// Command-line driver.  Subcommands:
//
//   capmink solve    <measure|density|problem.json> --p P [--out F] [--svg F]
//                    [--schedule 8,16,32] [--restarts N] [--seed S]
//   capmink measure  <polygon.json> --p P [--out F] [--svg F]
//   capmink capacity <polygon.json> --p P [--out F]
//   capmink verify   <polygon.json> --p P [--report F]
//
// Common flags: --config <solver.json> overrides discretization parameters,
// --deterministic suppresses timestamps and timing fields so identical
// inputs give bit-identical outputs.  The environment variable
// CAPMINK_THREADS caps internal parallelism.
//
// Exit codes: 0 success; 1 unreadable or malformed input (the message names
// the offending field); 2 inadmissible target measure (the message cites the
// offending atoms); 3 solver stalled before reaching its tolerance (outputs
// are still written); 4 a verification check failed.

namespace capmink {

int run_cli(int argc, char** argv);

}  // namespace capmink

#endif
