#pragma once

// Batch drivers behind the command-line tool. Each takes a parsed run
// configuration plus an output directory and writes
//   report.json  - machine-readable summary (sorted keys, no timestamps)
//   *.csv        - propagators / kernels, one row per frequency, %.17g
//   run.log      - short human-readable digest of the same numbers
// Nothing here is timed or randomized, so identical inputs produce
// byte-identical outputs. Errors surface as ConfigError / NumericalError.

#include <string>

#include "msgw/config.hpp"

namespace msgw {

// Self-consistent solve with the configured scheme.
void run_solve(const RunConfig& cfg, const std::string& out_dir);

// Exact-diagonalization reference on the same meshes.
void run_oracle(const RunConfig& cfg, const std::string& out_dir);

// Both of the above plus per-species deviation metrics.
void run_compare(const RunConfig& cfg, const std::string& out_dir);

// Re-solve across sweep.coupling_scales; per point also solves the static
// mean-field problem so the dynamic-correlation size can be read off.
void run_sweep(const RunConfig& cfg, const std::string& out_dir);

}  // namespace msgw
