#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "fmcal/pgps.hpp"

namespace fmcal {

// Objective evaluated at one grid cell: full parameter vector plus the
// cell's derived seed.
using CellObjective = std::function<double(const PgpsParams&, std::uint64_t)>;

struct GridSpec {
    int dim1 = 4;  // parameter indices in calibration order
    int dim2 = 5;
    int resolution = 20;
    std::pair<double, double> range1{0.0, 1.0};
    std::pair<double, double> range2{0.0, 1.0};
};

// Cell (i, j) covers the i-th subinterval of range1 and j-th of range2 and
// is evaluated at the subinterval midpoints.
struct GridScan {
    GridSpec spec;
    std::vector<double> axis1;  // midpoints, length resolution
    std::vector<double> axis2;
    std::vector<double> cells;  // row-major, cells[i * resolution + j]
    std::optional<std::pair<int, int>> target_cell;
};

// Evaluates objective over the grid. Cell seeds derive from (seed, i, j), so
// results are independent of evaluation order and thread count. When
// target_params is given, the cell containing its scanned coordinates is
// recorded.
GridScan grid_scan(const CellObjective& objective, const PgpsParams& fixed,
                   const GridSpec& spec, std::uint64_t seed, int threads = 1,
                   const std::optional<PgpsParams>& target_params = std::nullopt);

// Marks exactly k cells with the smallest objective values. Ties break
// toward the lower row-major index; NaN cells sort last. pre: 1 <= k <=
// cell count.
std::vector<std::uint8_t> top_k_mask(const GridScan& scan, int k);

// Number of cells sharing the exact minimum value (NaN cells ignored).
int tied_at_min_count(const GridScan& scan);

// Rows: i,j,value_dim1,value_dim2,objective,in_top_k
void write_grid_csv(const GridScan& scan, int k, std::ostream& out);

}  // namespace fmcal
