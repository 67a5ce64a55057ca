#pragma once

#include "langdiff/io.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace langdiff {

inline constexpr const char* kToolVersion = "0.3.0";

std::string sha256_hex(std::string_view bytes);
/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
/// Digest recorded for an input. JSON files are hashed in compact form with any
/// manifest `timing` block removed, so outputs chained from earlier runs stay
/// reproducible; everything else is hashed byte for byte.
std::string input_digest(const std::filesystem::path& path);

/// Provenance record attached to every output. Everything except `timing` is a
/// pure function of the inputs and flags.
struct RunManifest {
    std::string command;
    json config = json::object();
    std::vector<std::pair<std::string, std::string>> inputs; ///< (path, sha256)
    std::uint64_t seed = 0;
    std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

    void add_input(const std::filesystem::path& path);
    /// `timing` holds the start timestamp and wall-clock seconds so far.
    json to_json() const;
};

} // namespace langdiff
