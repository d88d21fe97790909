#ifndef POINTACL_MANIFEST_HPP
#define POINTACL_MANIFEST_HPP

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pointacl/error.hpp"

namespace pointacl {

/// Hex SHA-1 of "blob <size>\0<bytes>", the content hash git uses for files.
inline std::string git_blob_hash(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char c = md[i];
    out += kHex[c >> 4];
    out += kHex[c & 15];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string file_hash(const std::filesystem::path& path) { return git_blob_hash(read_file(path)); }

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Record of one CLI run: what went in, what came out, and how to repeat it.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config;  // "key = value" snapshot, empty when not applicable
  std::uint64_t seed = 0;
  std::string started, finished;
  std::map<std::string, std::string> inputs;   // path -> content hash
  std::map<std::string, std::string> outputs;  // path -> content hash
  std::map<std::string, double> results;

  /// Hashes a file, or every regular file below a directory.
  static void hash_into(std::map<std::string, std::string>& dst, const std::filesystem::path& p) {
    namespace fs = std::filesystem;
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) dst[f.string()] = file_hash(f);
    } else {
      dst[p.string()] = file_hash(p);
    }
  }
  void add_input(const std::filesystem::path& p) { hash_into(inputs, p); }
  void add_output(const std::filesystem::path& p) { hash_into(outputs, p); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["argv"] = argv;
    j["seed"] = seed;
    j["config"] = config;
    j["started"] = started;
    j["finished"] = finished;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["results"] = results;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.value("command", "");
    m.argv = j.value("argv", std::vector<std::string>{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.config = j.value("config", "");
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.results = j.value("results", std::map<std::string, double>{});
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
  }

  static RunManifest load(const std::filesystem::path& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      throw Error("bad manifest " + path.string() + ": " + e.what());
    }
  }
};

}  // namespace pointacl

#endif  // POINTACL_MANIFEST_HPP
