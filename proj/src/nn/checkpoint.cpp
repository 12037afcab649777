#include "physmass/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "physmass/errors.hpp"

namespace physmass {

namespace {

constexpr char kMagic[8] = {'P', 'H', 'Y', 'S', 'M', 'A', 'S', 'S'};
constexpr std::uint64_t kMaxArray = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_u64(std::istream& in, int bytes) {
  unsigned char buf[8] = {};
  in.read(reinterpret_cast<char*>(buf), bytes);
  if (!in) throw FormatError("checkpoint: unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v), 8); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in, 8)); }

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size(), 4);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  const std::uint64_t n = get_u64(in, 4);
  if (n > 4096) throw FormatError("checkpoint: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw FormatError("checkpoint: truncated string");
  return s;
}

}  // namespace

std::uint64_t CheckpointHeader::dim(const std::string& key) const {
  for (const auto& [k, v] : dims) {
    if (k == key) return v;
  }
  throw FormatError("checkpoint header has no dim '" + key + "'");
}

double CheckpointHeader::real(const std::string& key) const {
  for (const auto& [k, v] : reals) {
    if (k == key) return v;
  }
  throw FormatError("checkpoint header has no real '" + key + "'");
}

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw FormatError("checkpoint has no array '" + name + "'");
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, ckpt.header.format_version, 4);
  put_u64(out, ckpt.header.dims.size(), 4);
  for (const auto& [k, v] : ckpt.header.dims) {
    put_str(out, k);
    put_u64(out, v, 8);
  }
  put_u64(out, ckpt.header.reals.size(), 4);
  for (const auto& [k, v] : ckpt.header.reals) {
    put_str(out, k);
    put_f64(out, v);
  }
  put_str(out, ckpt.header.fusion);
  put_u64(out, ckpt.header.seed, 8);
  put_u64(out, ckpt.arrays.size(), 4);
  for (const auto& a : ckpt.arrays) {
    put_str(out, a.name);
    put_u64(out, a.data.size(), 8);
    for (double v : a.data) put_f64(out, v);
  }
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  Checkpoint ckpt;
  ckpt.header.format_version = static_cast<std::uint32_t>(get_u64(in, 4));
  if (ckpt.header.format_version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " +
                      std::to_string(ckpt.header.format_version));
  }
  const auto ndims = get_u64(in, 4);
  for (std::uint64_t i = 0; i < ndims; ++i) {
    std::string k = get_str(in);
    ckpt.header.dims.emplace_back(std::move(k), get_u64(in, 8));
  }
  const auto nreals = get_u64(in, 4);
  for (std::uint64_t i = 0; i < nreals; ++i) {
    std::string k = get_str(in);
    ckpt.header.reals.emplace_back(std::move(k), get_f64(in));
  }
  ckpt.header.fusion = get_str(in);
  ckpt.header.seed = get_u64(in, 8);
  const auto narrays = get_u64(in, 4);
  for (std::uint64_t i = 0; i < narrays; ++i) {
    NamedArray a;
    a.name = get_str(in);
    const auto n = get_u64(in, 8);
    if (n > kMaxArray) throw FormatError("checkpoint: implausible array length");
    a.data.resize(n);
    for (auto& v : a.data) v = get_f64(in);
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  return read_checkpoint(in);
}

}  // namespace physmass
