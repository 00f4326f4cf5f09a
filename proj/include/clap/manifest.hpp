#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace clap::manifest {

inline constexpr const char* kToolVersion = "0.1.0";

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    std::string subcommand;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
    std::vector<std::string> outputs;
    std::string tool_version = kToolVersion;
    std::string timestamp;  // UTC, ISO 8601
};

RunManifest make_manifest(std::string subcommand, nlohmann::ordered_json parameters,
                          const std::vector<std::filesystem::path>& inputs, std::vector<std::string> outputs);

nlohmann::ordered_json to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& path);

}  // namespace clap::manifest
