#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace dds {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitIo = 2, kExitNumerical = 3 };

/// Entry point of the `dds` tool: plan, simulate, process, analyze, run-all.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace dds
