#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace physmass {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned parameter container. On disk:
///   magic "PHYSMASS", u32 version,
///   u32 #dims, then (string key, u64 value) pairs,
///   u32 #reals, then (string key, f64 value) pairs,
///   string fusion, u64 seed,
///   u32 #arrays, then (string name, u64 count, f64[count]) records.
/// Strings are u32 length + bytes. All integers and reals little-endian.
struct CheckpointHeader {
  std::uint32_t format_version = kCheckpointVersion;
  std::vector<std::pair<std::string, std::uint64_t>> dims;
  std::vector<std::pair<std::string, double>> reals;
  std::string fusion;
  std::uint64_t seed = 0;

  std::uint64_t dim(const std::string& key) const;
  double real(const std::string& key) const;
};

struct NamedArray {
  std::string name;
  std::vector<double> data;
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace physmass
