#include "pcop/grid_io.hpp"

#include <fstream>

#include <json.hpp>

namespace pcop {

std::string grid_to_json(const AdaptiveGrid& grid) {
    nlohmann::json j;
    j["domain"] = {{"box_min", grid.domain().lo}, {"box_max", grid.domain().hi}};
    auto& cells = j["cells"] = nlohmann::json::array();
    for (const auto& c : grid.cells()) {
        nlohmann::json jc;
        jc["box_min"] = c.box.lo;
        jc["box_max"] = c.box.hi;
        jc["is_leaf"] = c.is_leaf();
        jc["split_axis"] = c.split_axis;
        cells.push_back(jc);
    }
    auto& pts = j["sample_points"] = nlohmann::json::array();
    for (int k = 0; k < grid.num_points(); ++k)
        pts.push_back({{"id", k}, {"coords", grid.point(k)}});
    return j.dump(2);
}

void write_grid_json(const AdaptiveGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << grid_to_json(grid) << "\n";
}

}  // namespace pcop
