#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lusd/backend.hpp"
#include "lusd/config.hpp"

namespace lusd::cli {

enum ExitCode : int {
    kOk = 0,
    kConfig = 2,     // bad flags, config file or value
    kTransport = 3,  // backend unreachable
    kProtocol = 4,   // malformed payload or version mismatch
    kBackend = 5,    // backend answered with an error
    kRuntime = 6,    // prompt, shape, IO and everything else
};

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& err);

/// Defaults, then the config file (if any), then CLI overrides in order.
EngineConfig resolve_config(const std::optional<std::filesystem::path>& file,
                            const std::vector<std::pair<std::string, std::string>>& overrides);

/// "analytic" (optionally with a world file) or an http:// URL.
std::unique_ptr<DenoiserBackend> make_backend(const std::string& spec, const std::string& world_path,
                                              int retries = 2);

/// Entry point; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lusd::cli
