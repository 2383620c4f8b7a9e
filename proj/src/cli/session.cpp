#include "session.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "radtext/cli.hpp"
#include "radtext/error.hpp"
#include "text_util.hpp"

namespace radtext::cli {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string Session::read_input(const std::string& path) {
  std::string content = detail::read_file(path);
  inputs[path] = checksum_hex(content);
  return content;
}

Container Session::read_container_input(const std::string& path) {
  const std::string bytes = read_input(path);
  return decode_container(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

void Session::write_output(const std::string& name, std::string_view content) {
  const auto path = out_dir / name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw Error("write failed: " + path.string());
  outputs[name] = checksum_hex(content);
  if (out) *out << "wrote " << path.string() << '\n';
}

void Session::write_container_output(const std::string& name, const Container& c) {
  const auto bytes = encode_container(c);
  write_output(name, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void Session::write_manifest() {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["threads"] = threads;
  m["cwd"] = std::filesystem::current_path().string();
  m["args"] = args;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  const auto path = out_dir / manifest_name();
  std::filesystem::create_directories(out_dir);
  std::ofstream f(path, std::ios::binary);
  f << m.dump(2) << '\n';
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace radtext::cli
