#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "radtext/container.hpp"

namespace radtext::cli {

/// State of one invocation: global flags plus every file read and written,
/// which ends up in the manifest.
struct Session {
  std::vector<std::string> args;
  std::string command;
  std::filesystem::path out_dir = ".";
  std::filesystem::path in_dir = ".";
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string config_path;
  std::ostream* out = nullptr;

  std::map<std::string, std::string> inputs;   // path -> checksum
  std::map<std::string, std::string> outputs;  // name under out_dir -> checksum

  std::string read_input(const std::string& path);
  Container read_container_input(const std::string& path);
  void write_output(const std::string& name, std::string_view content);
  void write_container_output(const std::string& name, const Container& c);
  std::string manifest_name() const { return "manifest_" + command + ".json"; }
  void write_manifest();
};

std::string checksum_hex(std::string_view bytes);

}  // namespace radtext::cli
