#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace radtext::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (without the program name). Returns the exit status;
/// failures print a one-line JSON error record to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, used for artifact checksums in manifests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace radtext::cli
