#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace evoes::cli {

/// Summary of one CLI invocation's outputs, written as manifest.json.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  std::vector<std::filesystem::path> artifacts;
  std::filesystem::path checkpoint;
  std::string checkpoint_hash;  // git blob id of the checkpoint bytes
};

/// SHA-1 of "blob <size>\0" + bytes, lowercase hex (same as git hash-object).
std::string git_blob_hash(const std::string& bytes);
std::string git_blob_hash_file(const std::filesystem::path& path);

std::string utc_timestamp();

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

/// Fills checkpoint_hash from the checkpoint file, checks every artifact
/// exists and writes <dir>/manifest.json. Returns the manifest path.
std::filesystem::path write_manifest(RunManifest manifest, const std::filesystem::path& dir);

}  // namespace evoes::cli
