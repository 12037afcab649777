#include "physmass/semantics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "physmass/errors.hpp"

namespace physmass {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("material table: bad " + what + " '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("material table: bad " + what + " '" + s + "'");
  return v;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
      return true;
    }
  }
  return false;
}

}  // namespace

MaterialVocab::MaterialVocab(std::vector<MaterialEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> names;
  std::set<std::string> aliases;
  for (auto& e : entries_) {
    e.name = trim(e.name);
    std::string lower;
    for (const auto& t : tokenize_lower(e.name)) lower += (lower.empty() ? "" : " ") + t;
    if (lower.empty()) throw ConfigError("material table: empty canonical name");
    if (!names.insert(lower).second) throw ConfigError("material table: duplicate name '" + e.name + "'");
    for (const auto& a : e.aliases) {
      std::string al;
      for (const auto& t : tokenize_lower(a)) al += (al.empty() ? "" : " ") + t;
      if (al.empty()) continue;
      if (!aliases.insert(al).second) {
        throw ConfigError("material table: alias '" + a + "' used by two entries");
      }
    }
    if (!(e.rho_lo > 0.0) || !(e.rho_lo <= e.rho_hi) || !std::isfinite(e.rho_hi)) {
      throw ConfigError("material table: invalid density range for '" + e.name + "'");
    }
  }
}

MaterialVocab MaterialVocab::parse(std::istream& in) {
  std::vector<MaterialEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto fields = split(line, '|');
    if (fields.size() != 4) {
      throw ConfigError("material table line " + std::to_string(lineno) + ": expected 4 fields");
    }
    MaterialEntry e;
    e.name = fields[0];
    for (auto& a : split(fields[1], ',')) {
      if (!a.empty()) e.aliases.push_back(std::move(a));
    }
    e.rho_lo = parse_real(fields[2], "rho_lo");
    e.rho_hi = parse_real(fields[3], "rho_hi");
    entries.push_back(std::move(e));
  }
  return MaterialVocab(std::move(entries));
}

MaterialVocab MaterialVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open material table " + path);
  return parse(in);
}

MaterialVocab MaterialVocab::default_vocab() {
  // Mirror of data/materials.txt so the library works without the data dir.
  static const char* kTable =
      "plastic|abs,pvc,polypropylene,polyethylene,polycarbonate,acrylic,nylon,polymer,plastics|900|1400\n"
      "steel|stainless,iron,metal,metallic,chrome|7750|8050\n"
      "aluminum|aluminium,alloy|2640|2810\n"
      "pine wood|pine,softwood,wood,wooden,timber,plywood|350|600\n"
      "hardwood|oak,maple,walnut,beech,teak,mahogany,bamboo|600|900\n"
      "glass|crystal,glassware|2400|2800\n"
      "ceramic|porcelain,stoneware,earthenware,clay,terracotta|2000|2600\n"
      "rubber|silicone,latex,neoprene|900|1300\n"
      "fabric|cloth,cotton,textile,polyester,wool,linen,canvas,felt|200|600\n"
      "cardboard|paperboard,paper,carton,corrugated|600|800\n";
  std::istringstream in(kTable);
  return parse(in);
}

void MaterialVocab::write(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  for (const auto& e : entries_) {
    out << e.name << '|';
    for (std::size_t i = 0; i < e.aliases.size(); ++i) out << (i ? "," : "") << e.aliases[i];
    out << '|' << e.rho_lo << '|' << e.rho_hi << '\n';
  }
  out.precision(old_precision);
}

const MaterialEntry& MaterialVocab::entry(MaterialId id) const {
  if (id >= entries_.size()) {
    throw IndexError("material id " + std::to_string(id) + " has no vocabulary entry");
  }
  return entries_[id];
}

std::string MaterialVocab::name(MaterialId id) const {
  if (id == unknown_id()) return "unknown";
  return entry(id).name;
}

MaterialId MaterialVocab::id_of(std::string_view canonical) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == canonical) return i;
  }
  if (canonical == "unknown") return unknown_id();
  throw IndexError("no material named '" + std::string(canonical) + "'");
}

std::vector<std::string> tokenize_lower(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

MaterialId parse_material(std::string_view text, const MaterialVocab& vocab) {
  if (vocab.empty()) throw ConfigError("parse_material: empty vocabulary");
  const auto tokens = tokenize_lower(text);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (contains_sequence(tokens, tokenize_lower(vocab.entries()[i].name))) return i;
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    for (const auto& alias : vocab.entries()[i].aliases) {
      if (contains_sequence(tokens, tokenize_lower(alias))) return i;
    }
  }
  return vocab.unknown_id();
}

MaterialEmbedding MaterialEmbedding::init(const MaterialVocab& vocab, std::size_t dim, Rng& rng) {
  return init(vocab.embedding_rows(), dim, rng);
}

MaterialEmbedding MaterialEmbedding::init(std::size_t rows, std::size_t dim, Rng& rng) {
  if (rows < 1 || dim < 1) throw DimensionError("material embedding: empty table");
  MaterialEmbedding emb{Tensor2(rows, dim)};
  for (double& v : emb.table.data) v = rng.normal();
  if (dim >= rows) {
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = emb.table.row(r);
      for (std::size_t q = 0; q < r; ++q) {
        const auto prev = emb.table.row(q);
        const double proj = dot(row, prev) / dot(prev, prev);
        for (std::size_t c = 0; c < dim; ++c) row[c] -= proj * prev[c];
      }
    }
  }
  const double target = std::sqrt(static_cast<double>(dim));
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = emb.table.row(r);
    const double n = l2_norm(row);
    for (double& v : row) v *= target / n;
  }
  return emb;
}

Vec embed_material(const MaterialEmbedding& emb, MaterialId id, const LayerNormParams& norm) {
  if (id >= emb.table.rows) {
    throw IndexError("embed_material: id " + std::to_string(id) + " outside table of " +
                     std::to_string(emb.table.rows) + " rows");
  }
  return layernorm_forward(norm, emb.table.row(id));
}

Vec embed_material(const MaterialEmbedding& emb, MaterialId id) {
  return embed_material(emb, id, LayerNormParams(emb.dim()));
}

double rule_based_density(MaterialId id, const MaterialVocab& vocab) {
  if (id == vocab.unknown_id()) throw UnknownMaterialError("rule_based_density: unknown material");
  const auto& e = vocab.entry(id);
  return 0.5 * (e.rho_lo + e.rho_hi);
}

}  // namespace physmass
