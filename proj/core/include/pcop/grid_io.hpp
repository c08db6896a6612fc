#ifndef PCOP_GRID_IO_HPP
#define PCOP_GRID_IO_HPP

#include <string>

#include "pcop/grid.hpp"

namespace pcop {

/// JSON dump of the cell tree and sample-point registry:
///   {"domain": {...},
///    "cells":  [{"box_min": [...], "box_max": [...], "is_leaf": b, "split_axis": a}, ...],
///    "sample_points": [{"id": k, "coords": [...]}, ...]}
std::string grid_to_json(const AdaptiveGrid& grid);

void write_grid_json(const AdaptiveGrid& grid, const std::string& path);

}  // namespace pcop

#endif
