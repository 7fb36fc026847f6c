#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace neuroprobe::cli {

// Stable process exit codes.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kFormat = 3,   // malformed file, digest mismatch, I/O failure, replay mismatch
    kNumeric = 4,
};

inline constexpr const char* kToolVersion = "neuroprobe 0.1.0";

// Entry point shared by the executable and in-process tests. `args` excludes
// the program name. Errors are reported on stderr, the manifest on stdout.
int run(const std::vector<std::string>& args);

/// Runs one command from its canonical parameter object (the "params" field
/// of a manifest). Returns the manifest it wrote. Throws neuroprobe::Error
/// subclasses on failure.
nlohmann::json execute(const std::string& command, const nlohmann::json& params);

/// Re-executes the command recorded in a manifest file, writing outputs under
/// `out` (or the recorded location when empty), and checks every output's
/// SHA-256 against the manifest. Throws DigestError on any mismatch.
nlohmann::json replay(const std::string& manifest_path, const std::string& out);

}  // namespace neuroprobe::cli
