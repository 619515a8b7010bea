#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace til {

// FNV-1a 64-bit over raw bytes; used to checksum run artifacts.
inline uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything needed to reproduce a run bit-identically: the fully resolved
// config text, the seed, and checksums of what the run produced.
struct RunManifest {
  std::string command;
  std::string config_text;
  uint64_t seed = 0;
  std::string out_dir;
  struct Artifact {
    std::string name;
    uint64_t bytes = 0;
    std::string fnv64;  // hex
  };
  std::vector<Artifact> artifacts;

  void add_artifact(const std::string& name, const std::string& path) {
    const std::string data = read_file_bytes(path);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    artifacts.push_back({name, data.size(), hex});
  }

  std::string to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_text"] = config_text;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["artifacts"] = nlohmann::json::array();
    for (const auto& a : artifacts)
      j["artifacts"].push_back({{"name", a.name}, {"bytes", a.bytes}, {"fnv64", a.fnv64}});
    return j.dump(2) + "\n";
  }

  static RunManifest from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_text = j.at("config_text").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.out_dir = j.at("out_dir").get<std::string>();
    for (const auto& a : j.at("artifacts"))
      m.artifacts.push_back({a.at("name").get<std::string>(), a.at("bytes").get<uint64_t>(),
                             a.at("fnv64").get<std::string>()});
    return m;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << to_json();
  }

  static RunManifest load(const std::string& path) { return from_json(read_file_bytes(path)); }
};

}  // namespace til
