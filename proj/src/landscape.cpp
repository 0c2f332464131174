#include "fmcal/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fmcal/parallel.hpp"
#include "fmcal/rng.hpp"
#include "fmcal/series_io.hpp"

namespace fmcal {

namespace {

void validate(const GridSpec& spec) {
    if (spec.resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
    if (spec.dim1 < 0 || spec.dim1 >= PgpsParams::kDim || spec.dim2 < 0 ||
        spec.dim2 >= PgpsParams::kDim)
        throw std::invalid_argument("grid dimension index out of range");
    if (spec.dim1 == spec.dim2)
        throw std::invalid_argument("grid dimensions must differ");
    if (!(spec.range1.first < spec.range1.second) ||
        !(spec.range2.first < spec.range2.second))
        throw std::invalid_argument("grid ranges must satisfy lo < hi");
}

double midpoint(const std::pair<double, double>& range, int idx, int res) {
    const double w = (range.second - range.first) / res;
    return range.first + (idx + 0.5) * w;
}

// containing-cell index of a value; nullopt when outside the range
std::optional<int> cell_of(const std::pair<double, double>& range, double v, int res) {
    if (v < range.first || v > range.second) return std::nullopt;
    const double t = (v - range.first) / (range.second - range.first);
    const int idx = static_cast<int>(std::floor(t * res));
    return std::clamp(idx, 0, res - 1);
}

}  // namespace

GridScan grid_scan(const CellObjective& objective, const PgpsParams& fixed,
                   const GridSpec& spec, std::uint64_t seed, int threads,
                   const std::optional<PgpsParams>& target_params) {
    validate(spec);
    const int res = spec.resolution;

    GridScan scan;
    scan.spec = spec;
    scan.axis1.resize(res);
    scan.axis2.resize(res);
    for (int i = 0; i < res; ++i) scan.axis1[i] = midpoint(spec.range1, i, res);
    for (int j = 0; j < res; ++j) scan.axis2[j] = midpoint(spec.range2, j, res);
    scan.cells.assign(static_cast<std::size_t>(res) * res, 0.0);

    const auto base = fixed.to_array();
    parallel_for(scan.cells.size(), threads, [&](std::size_t cell) {
        const int i = static_cast<int>(cell) / res;
        const int j = static_cast<int>(cell) % res;
        auto arr = base;
        arr[spec.dim1] = scan.axis1[i];
        arr[spec.dim2] = scan.axis2[j];
        const std::uint64_t cell_seed =
            derive_seed(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
        scan.cells[cell] = objective(PgpsParams::from_array(arr), cell_seed);
    });

    if (target_params) {
        const auto t = target_params->to_array();
        const auto ci = cell_of(spec.range1, t[spec.dim1], res);
        const auto cj = cell_of(spec.range2, t[spec.dim2], res);
        if (ci && cj) scan.target_cell = std::make_pair(*ci, *cj);
    }
    return scan;
}

std::vector<std::uint8_t> top_k_mask(const GridScan& scan, int k) {
    const std::size_t n = scan.cells.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("k must lie in [1, cell count]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t idx) {
        const double v = scan.cells[idx];
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = key(a), kb = key(b);
        if (ka != kb) return ka < kb;
        return a < b;  // ties resolve toward the lower row-major index
    });
    std::vector<std::uint8_t> mask(n, 0);
    for (int r = 0; r < k; ++r) mask[order[static_cast<std::size_t>(r)]] = 1;
    return mask;
}

int tied_at_min_count(const GridScan& scan) {
    double best = std::numeric_limits<double>::infinity();
    for (const double v : scan.cells)
        if (!std::isnan(v) && v < best) best = v;
    if (!std::isfinite(best)) return 0;
    int count = 0;
    for (const double v : scan.cells)
        if (v == best) ++count;
    return count;
}

void write_grid_csv(const GridScan& scan, int k, std::ostream& out) {
    const auto mask = top_k_mask(scan, k);
    const int res = scan.spec.resolution;
    out << "i,j,value_dim1,value_dim2,objective,in_top_k\n";
    for (int i = 0; i < res; ++i) {
        for (int j = 0; j < res; ++j) {
            const std::size_t cell = static_cast<std::size_t>(i) * res + j;
            out << i << ',' << j << ',' << format_double(scan.axis1[i]) << ','
                << format_double(scan.axis2[j]) << ',' << format_double(scan.cells[cell])
                << ',' << static_cast<int>(mask[cell]) << '\n';
        }
    }
}

}  // namespace fmcal
