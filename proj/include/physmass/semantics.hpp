#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "physmass/layernorm.hpp"
#include "physmass/rng.hpp"
#include "physmass/tensor.hpp"

namespace physmass {

using MaterialId = std::size_t;

struct MaterialEntry {
  std::string name;
  std::vector<std::string> aliases;
  double rho_lo = 0.0;  // kg/m^3
  double rho_hi = 0.0;
};

/// Ordered material vocabulary. Ids 0..size()-1 are the entries; id size()
/// is the designated unknown material.
class MaterialVocab {
 public:
  MaterialVocab() = default;
  explicit MaterialVocab(std::vector<MaterialEntry> entries);

  // Lines of `canonical|alias1,alias2|rho_lo|rho_hi`; '#' starts a comment.
  static MaterialVocab parse(std::istream& in);
  static MaterialVocab load(const std::string& path);
  // The shipped ten-material table.
  static MaterialVocab default_vocab();

  void write(std::ostream& out) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  MaterialId unknown_id() const { return entries_.size(); }
  // Rows needed by an embedding table: entries plus the unknown row.
  std::size_t embedding_rows() const { return entries_.size() + 1; }

  const MaterialEntry& entry(MaterialId id) const;
  const std::vector<MaterialEntry>& entries() const { return entries_; }
  std::string name(MaterialId id) const;
  MaterialId id_of(std::string_view canonical) const;  // throws IndexError

 private:
  std::vector<MaterialEntry> entries_;
};

/// Canonical names are matched before aliases; within each pass the first
/// entry in vocab order wins. Never fails on text: no match gives unknown_id().
MaterialId parse_material(std::string_view text, const MaterialVocab& vocab);

std::vector<std::string> tokenize_lower(std::string_view text);

/// Frozen per-material embedding table (|vocab|+1 rows x D).
struct MaterialEmbedding {
  Tensor2 table;

  std::size_t dim() const { return table.cols; }
  // Rows are seeded random then Gram-Schmidt orthogonalized (when D allows)
  // and scaled to norm sqrt(D).
  static MaterialEmbedding init(const MaterialVocab& vocab, std::size_t dim, Rng& rng);
  static MaterialEmbedding init(std::size_t rows, std::size_t dim, Rng& rng);
};

// Row `id` passed through LayerNorm `norm` (identity affine by default).
Vec embed_material(const MaterialEmbedding& emb, MaterialId id, const LayerNormParams& norm);
Vec embed_material(const MaterialEmbedding& emb, MaterialId id);

// Midpoint of the material's density range.
double rule_based_density(MaterialId id, const MaterialVocab& vocab);

}  // namespace physmass
