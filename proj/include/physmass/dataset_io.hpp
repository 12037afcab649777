#pragma once

#include <string>

#include "physmass/synthbench.hpp"

namespace physmass {

/// Dataset directory layout:
///   manifest.tsv    one tab-separated record per sample (header line first)
///   categories.tsv  category, seen|unseen
///   materials.txt   vocabulary used to generate the samples
///   depth/<id>.pd   depth grid, depth/<id>.rle mask sidecar
/// Reals are written with 17 significant digits so a reload is lossless.
void write_dataset(const std::string& dir, const Dataset& ds);
Dataset read_dataset(const std::string& dir);

}  // namespace physmass
