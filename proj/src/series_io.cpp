#include "fmcal/series_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fmcal {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_series_csv(std::span<const double> values, std::ostream& out) {
    out << "t,mid_price\n";
    for (std::size_t t = 0; t < values.size(); ++t) {
        const double twice = 2.0 * values[t];
        const std::int64_t tw = std::llround(twice);
        if (std::abs(twice - static_cast<double>(tw)) > 1e-6)
            throw std::logic_error("series value is not a half-integer tick");
        out << (t + 1) << ',' << (tw / 2) << '.' << ((tw % 2) ? '5' : '0') << '\n';
    }
}

void write_series_csv_file(std::span<const double> values, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_series_csv(values, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

bool parse_two_fields(const std::string& line, double& a, double& b) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) return false;
    if (line.find(',', comma + 1) != std::string::npos) return false;
    try {
        std::size_t used = 0;
        const std::string f1 = line.substr(0, comma);
        const std::string f2 = line.substr(comma + 1);
        a = std::stod(f1, &used);
        while (used < f1.size() && std::isspace(static_cast<unsigned char>(f1[used]))) ++used;
        if (used != f1.size()) return false;
        b = std::stod(f2, &used);
        while (used < f2.size() && std::isspace(static_cast<unsigned char>(f2[used]))) ++used;
        if (used != f2.size()) return false;
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

std::vector<double> read_series_csv(std::istream& in, const std::string& name) {
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double t = 0.0, v = 0.0;
        if (!parse_two_fields(line, t, v)) {
            // a single non-numeric leading row is accepted as the header
            if (first_content) {
                first_content = false;
                continue;
            }
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": malformed series row");
        }
        first_content = false;
        if (!(v > 0.0))
            throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                     ": non-positive mid-price");
        out.push_back(v);
    }
    if (out.empty()) throw std::runtime_error(name + ": series is empty");
    return out;
}

std::vector<double> read_series_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open series file: " + path);
    return read_series_csv(in, path);
}

std::vector<double> convert_to_ticks(std::span<const double> values, double tick_size) {
    if (!(tick_size > 0.0)) throw std::invalid_argument("tick size must be positive");
    std::vector<double> out;
    out.reserve(values.size());
    for (const double v : values)
        out.push_back(std::llround(2.0 * v / tick_size) / 2.0);
    return out;
}

}  // namespace fmcal
