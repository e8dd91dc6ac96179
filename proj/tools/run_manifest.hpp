#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gki::cli {

/// SHA-1 of "blob <size>\0<content>", the id git gives the same bytes.
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::string& path);

struct FileEntry {
  std::string path;
  std::string sha1;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<FileEntry> inputs;
  std::vector<FileEntry> outputs;
  std::vector<std::string> logs;  // timing-bearing files, not hashed
  double wall_seconds = 0.0;

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// `<output>.manifest.json`
std::string manifest_path_for(const std::string& output);
void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

}  // namespace gki::cli
