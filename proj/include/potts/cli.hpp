#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace potts {

// Entry point for the command-line driver; returns the process exit code.
// Subcommands: gen, phase, fixedpoint, sample, lwc, purestate, critical,
// free-energy, oracle.  Exit code 0 iff the run completed and every
// embedded check passed.  Exposed as a library function so tests can
// drive full command invocations in-process.
int run_cli(int argc, const char* const* argv);

// 64-bit FNV-1a over the canonical serialization of the effective
// configuration; stamped into every report so outputs are traceable to
// the exact configuration that produced them.
std::uint64_t fnv1a64(std::string_view s);

// Fixed-width lowercase hex rendering of a hash.
std::string hash_hex(std::uint64_t h);

// Spins of one snapshot packed as base-36 digits (one character per base
// vertex, most significant vertex first is vertex 0); requires q <= 36.
std::string pack_spins_base36(const std::uint8_t* colors, int n_base);

}  // namespace potts
