#pragma once

#include <iosfwd>
#include <string>

#include "physmass/geometry.hpp"

namespace physmass {

// Depth grid: a "PD" line, "width height", then one row of %.17g values per line.
void write_depth_grid(std::ostream& out, const DepthMap& d);
// Mask sidecar: "RLE width height", then one line per row of alternating run
// lengths starting with a background run (possibly 0).
void write_mask_rle(std::ostream& out, const DepthMap& d);

// Reads both parts into one DepthMap.
DepthMap read_depth(std::istream& grid, std::istream& mask);

void save_depth(const std::string& grid_path, const std::string& mask_path, const DepthMap& d);
DepthMap load_depth(const std::string& grid_path, const std::string& mask_path);

}  // namespace physmass
