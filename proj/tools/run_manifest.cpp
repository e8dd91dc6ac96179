#include "run_manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "gki/numeric.hpp"

namespace gki::cli {

using json = nlohmann::json;

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string git_blob_sha1_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_sha1(ss.str());
}

void RunManifest::add_input(const std::string& path) { inputs.push_back({path, git_blob_sha1_file(path)}); }
void RunManifest::add_output(const std::string& path) { outputs.push_back({path, git_blob_sha1_file(path)}); }

json RunManifest::to_json() const {
  auto files = [](const std::vector<FileEntry>& v) {
    json a = json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha1", f.sha1}});
    return a;
  };
  return json{{"command", command}, {"argv", argv},           {"config", config},
              {"seed", seed},       {"inputs", files(inputs)}, {"outputs", files(outputs)},
              {"logs", logs},       {"wall_seconds", wall_seconds}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.value("config", json::object());
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha1")});
    for (const auto& f : j.at("outputs")) m.outputs.push_back({f.at("path"), f.at("sha1")});
    m.logs = j.value("logs", std::vector<std::string>{});
    m.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << m.to_json().dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  try {
    return RunManifest::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
}

}  // namespace gki::cli
