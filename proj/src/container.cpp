#include "radtext/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "radtext/error.hpp"

namespace radtext {
namespace {

constexpr char kMagic[4] = {'R', 'T', 'X', 'C'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void str16(std::string_view s) {
    if (s.size() > 0xffff) throw ConfigError("container: key too long");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void str32(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string str16() { return bytes(u16()); }
  std::string str32() { return bytes(u32()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ParseError("container: truncated data");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int64_t Container::get_int(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end() || !std::holds_alternative<std::int64_t>(it->second))
    throw ParseError("container: missing integer field '" + key + "'");
  return std::get<std::int64_t>(it->second);
}

double Container::get_double(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end() || !std::holds_alternative<double>(it->second))
    throw ParseError("container: missing real field '" + key + "'");
  return std::get<double>(it->second);
}

const std::string& Container::get_string(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end() || !std::holds_alternative<std::string>(it->second))
    throw ParseError("container: missing string field '" + key + "'");
  return std::get<std::string>(it->second);
}

const Matrix32& Container::get_matrix(const std::string& name) const {
  auto it = matrices.find(name);
  if (it == matrices.end()) throw ParseError("container: missing matrix '" + name + "'");
  return it->second;
}

std::vector<std::uint8_t> encode_container(const Container& c) {
  Writer w;
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u32(kContainerVersion);
  w.str16(c.kind);
  w.u32(static_cast<std::uint32_t>(c.meta.size()));
  for (const auto& [key, value] : c.meta) {
    w.str16(key);
    if (const auto* i = std::get_if<std::int64_t>(&value)) {
      w.u8(0);
      w.u64(static_cast<std::uint64_t>(*i));
    } else if (const auto* d = std::get_if<double>(&value)) {
      w.u8(1);
      w.u64(std::bit_cast<std::uint64_t>(*d));
    } else {
      w.u8(2);
      w.str32(std::get<std::string>(value));
    }
  }
  w.u32(static_cast<std::uint32_t>(c.matrices.size()));
  for (const auto& [name, m] : c.matrices) {
    if (m.values.size() != std::size_t{m.rows} * m.cols)
      throw ConfigError("container: matrix '" + name + "' has inconsistent shape");
    w.str16(name);
    w.u32(m.rows);
    w.u32(m.cols);
    for (float f : m.values) w.u32(std::bit_cast<std::uint32_t>(f));
  }
  return w.take();
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw ParseError("container: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion)
    throw ParseError("container: unsupported format version " + std::to_string(version));
  Container c;
  c.kind = r.str16();
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.str16();
    const std::uint8_t tag = r.u8();
    switch (tag) {
      case 0: c.meta[key] = static_cast<std::int64_t>(r.u64()); break;
      case 1: c.meta[key] = std::bit_cast<double>(r.u64()); break;
      case 2: c.meta[key] = r.str32(); break;
      default: throw ParseError("container: unknown metadata tag");
    }
  }
  const std::uint32_t n_mat = r.u32();
  for (std::uint32_t i = 0; i < n_mat; ++i) {
    std::string name = r.str16();
    Matrix32 m;
    m.rows = r.u32();
    m.cols = r.u32();
    m.values.resize(std::size_t{m.rows} * m.cols);
    for (float& f : m.values) f = std::bit_cast<float>(r.u32());
    c.matrices.emplace(std::move(name), std::move(m));
  }
  if (!r.done()) throw ParseError("container: trailing bytes");
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  const auto bytes = encode_container(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_container(bytes);
}

Matrix32 to_matrix32(std::size_t rows, std::size_t cols, std::span<const double> values) {
  Matrix32 m;
  m.rows = static_cast<std::uint32_t>(rows);
  m.cols = static_cast<std::uint32_t>(cols);
  m.values.reserve(values.size());
  for (double v : values) m.values.push_back(static_cast<float>(v));
  return m;
}

std::vector<double> from_matrix32(const Matrix32& m) {
  return std::vector<double>(m.values.begin(), m.values.end());
}

}  // namespace radtext
