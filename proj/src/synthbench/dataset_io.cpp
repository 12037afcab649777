#include "physmass/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "physmass/depth_io.hpp"
#include "physmass/errors.hpp"

namespace physmass {

namespace fs = std::filesystem;

namespace {

constexpr const char* kHeader =
    "id\tsplit\tcategory\tkind\tdim0\tdim1\tdim2\tfill\tmaterial\trho\tvolume\tmass\tfootprint\t"
    "depth_file\tmask_file\tmaterial_text\tappearance";
constexpr std::size_t kColumns = 17;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("manifest: bad number '" + s + "' in " + what);
  }
  if (used != s.size()) throw FormatError("manifest: bad number '" + s + "' in " + what);
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& ds) {
  const fs::path root(dir);
  fs::create_directories(root / "depth");

  auto vocab_out = open_out(root / "materials.txt");
  ds.vocab.write(vocab_out);

  auto cat_out = open_out(root / "categories.tsv");
  for (const auto& c : ds.categories) {
    const bool unseen = std::find(ds.unseen_categories.begin(), ds.unseen_categories.end(), c) !=
                        ds.unseen_categories.end();
    cat_out << c << '\t' << (unseen ? "unseen" : "seen") << '\n';
  }

  auto out = open_out(root / "manifest.tsv");
  out << kHeader << '\n';
  for (const auto& s : ds.samples) {
    if (s.material_text.find_first_of("\t\n") != std::string::npos) {
      throw FormatError("manifest: material text of " + s.id + " contains a tab or newline");
    }
    const std::string depth_file = "depth/" + s.id + ".pd";
    const std::string mask_file = "depth/" + s.id + ".rle";
    save_depth((root / depth_file).string(), (root / mask_file).string(), s.depth);
    std::string app;
    for (std::size_t i = 0; i < s.appearance.size(); ++i) {
      app += (i ? "," : "") + fmt17(s.appearance[i]);
    }
    out << s.id << '\t' << to_string(s.split) << '\t' << s.category << '\t' << to_string(s.shape.kind)
        << '\t' << fmt17(s.shape.dims[0]) << '\t' << fmt17(s.shape.dims[1]) << '\t'
        << fmt17(s.shape.dims[2]) << '\t' << fmt17(s.shape.fill_ratio) << '\t' << s.material_name
        << '\t' << fmt17(s.density) << '\t' << fmt17(s.volume) << '\t' << fmt17(s.mass) << '\t'
        << fmt17(s.footprint) << '\t' << depth_file << '\t' << mask_file << '\t' << s.material_text
        << '\t' << app << '\n';
  }
  if (!out) throw InputError("failed writing manifest in " + dir);
}

Dataset read_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw InputError("dataset directory " + dir + " does not exist");
  Dataset ds;
  ds.vocab = MaterialVocab::load((root / "materials.txt").string());

  auto cat_in = open_in(root / "categories.tsv");
  std::string line;
  while (std::getline(cat_in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 2 || (f[1] != "seen" && f[1] != "unseen")) {
      throw FormatError("categories.tsv: bad line '" + line + "'");
    }
    ds.categories.push_back(f[0]);
    if (f[1] == "unseen") ds.unseen_categories.push_back(f[0]);
  }
  std::sort(ds.unseen_categories.begin(), ds.unseen_categories.end());

  auto in = open_in(root / "manifest.tsv");
  if (!std::getline(in, line) || line != kHeader) throw FormatError("manifest.tsv: missing header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    const std::string where = "manifest line " + std::to_string(lineno);
    if (f.size() != kColumns) throw FormatError(where + ": expected 17 fields");
    Sample s;
    s.id = f[0];
    s.split = split_from_string(f[1]);
    s.category = f[2];
    s.shape.kind = shape_kind_from_string(f[3]);
    for (int k = 0; k < 3; ++k) s.shape.dims[k] = parse_double(f[4 + k], where);
    s.shape.fill_ratio = parse_double(f[7], where);
    s.shape.validate();
    s.material_name = f[8];
    s.material = ds.vocab.id_of(f[8]);
    s.density = parse_double(f[9], where);
    s.volume = parse_double(f[10], where);
    s.mass = parse_double(f[11], where);
    s.footprint = parse_double(f[12], where);
    s.depth = load_depth((root / f[13]).string(), (root / f[14]).string());
    s.material_text = f[15];
    for (const auto& a : split(f[16], ',')) s.appearance.push_back(parse_double(a, where));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace physmass
