#include "physmass/depth_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "physmass/errors.hpp"

namespace physmass {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_depth_grid(std::ostream& out, const DepthMap& d) {
  out << "PD\n" << d.width << ' ' << d.height << '\n';
  for (std::size_t v = 0; v < d.height; ++v) {
    for (std::size_t u = 0; u < d.width; ++u) {
      if (u) out << ' ';
      out << fmt17(d.depth[d.index(u, v)]);
    }
    out << '\n';
  }
}

void write_mask_rle(std::ostream& out, const DepthMap& d) {
  out << "RLE " << d.width << ' ' << d.height << '\n';
  for (std::size_t v = 0; v < d.height; ++v) {
    std::uint8_t cur = 0;
    std::size_t run = 0;
    bool first = true;
    for (std::size_t u = 0; u < d.width; ++u) {
      const std::uint8_t m = d.mask[d.index(u, v)] ? 1 : 0;
      if (m == cur) {
        ++run;
      } else {
        out << (first ? "" : " ") << run;
        first = false;
        cur = m;
        run = 1;
      }
    }
    out << (first ? "" : " ") << run << '\n';
  }
}

DepthMap read_depth(std::istream& grid, std::istream& mask) {
  std::string magic;
  std::size_t w = 0, h = 0;
  if (!(grid >> magic >> w >> h) || magic != "PD") throw FormatError("depth grid: bad header");
  std::string mmagic;
  std::size_t mw = 0, mh = 0;
  if (!(mask >> mmagic >> mw >> mh) || mmagic != "RLE") throw FormatError("mask: bad header");
  if (mw != w || mh != h) throw FormatError("mask dimensions differ from depth grid");
  if (w == 0 || h == 0 || w > 65536 || h > 65536) throw FormatError("depth grid: bad size");
  DepthMap d(w, h);
  for (auto& v : d.depth) {
    if (!(grid >> v)) throw FormatError("depth grid: truncated");
  }
  std::string line;
  std::getline(mask, line);  // rest of header line
  for (std::size_t v = 0; v < h; ++v) {
    if (!std::getline(mask, line)) throw FormatError("mask: truncated");
    std::istringstream row(line);
    std::size_t run = 0, u = 0;
    std::uint8_t cur = 0;
    while (row >> run) {
      if (u + run > w) throw FormatError("mask: row overflows width");
      for (std::size_t k = 0; k < run; ++k) d.mask[d.index(u + k, v)] = cur;
      u += run;
      cur ^= 1;
    }
    if (u != w) throw FormatError("mask: row " + std::to_string(v) + " does not cover the width");
  }
  return d;
}

void save_depth(const std::string& grid_path, const std::string& mask_path, const DepthMap& d) {
  std::ofstream g(grid_path);
  std::ofstream m(mask_path);
  if (!g || !m) throw InputError("cannot write depth files " + grid_path);
  write_depth_grid(g, d);
  write_mask_rle(m, d);
}

DepthMap load_depth(const std::string& grid_path, const std::string& mask_path) {
  std::ifstream g(grid_path);
  std::ifstream m(mask_path);
  if (!g) throw InputError("cannot open depth grid " + grid_path);
  if (!m) throw InputError("cannot open mask " + mask_path);
  return read_depth(g, m);
}

}  // namespace physmass
