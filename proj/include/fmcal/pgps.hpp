#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmcal/order_book.hpp"
#include "fmcal/rng.hpp"

namespace fmcal {

// Free parameters of the provider/taker market model, in calibration order.
struct PgpsParams {
    double alpha = 0.1;     // provider limit-order submission probability
    double mu = 0.01;       // taker market-order submission probability
    double delta = 0.01;    // taker cancellation probability
    double delta_s = 0.001; // buy-intensity random-walk step
    double lambda0 = 100.0; // base placement depth
    double c_lambda = 10.0; // depth modulation gain

    static constexpr int kDim = 6;

    std::array<double, kDim> to_array() const {
        return {alpha, mu, delta, delta_s, lambda0, c_lambda};
    }
    static PgpsParams from_array(std::span<const double> v);
};

const std::array<std::string, PgpsParams::kDim>& param_names();

// Search box used for synthetic-data studies; also the default calibration
// bounds.
std::array<std::pair<double, double>, PgpsParams::kDim> default_bounds();

struct SimConfig {
    int n_agents = 125;        // per type: n providers and n takers
    int horizon = 3600;        // steps, one mid-price sample per step
    Price initial_price = 7500;
    int msd_samples = 100000;  // Monte Carlo steps for the q-walk dispersion
    double msd_floor = 1e-12;
    // When true, ask quotes subtract the depth offset instead of adding it,
    // which places them at or below the best bid and makes them immediately
    // marketable. Default keeps bid/ask placement mirror-symmetric.
    bool ask_offset_inward = false;
    // When true, provider and taker action slots are interleaved in a random
    // order each step instead of running providers first.
    bool shuffle_agents = false;
};

struct MidPriceSeries {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::optional<PgpsParams> params;
};

// One step of the mean-reverting buy-intensity walk: moves toward 1/2 with
// probability 1/2 + |q - 1/2|, away otherwise, step delta_s, clamped to
// [0, 1]. The branch form takes the direction decision explicitly.
double step_q_taker_branch(double q, double delta_s, bool approach);
double step_q_taker(double q, double delta_s, Rng& rng);

// Mean squared deviation of the walk around 1/2, estimated once per run by
// simulating `samples` steps from q = 1/2. Floored away from zero because it
// sits under a square root in the depth law. delta_s = 0 short-circuits to
// the floor.
double estimate_msd(double delta_s, int samples, Rng& rng, double floor_value = 1e-12);

// Placement depth lambda(t) = lambda0 * (1 + |q - 1/2| / sqrt(msd) * c).
// pre: lambda0 > 0, msd > 0.
double lambda_depth(double lambda0, double c_lambda, double q, double msd);

// Provider quote price. Bids reference the best ask, asks the best bid;
// offset = floor(-lambda_t * ln u) ticks away from the far touch. Clamped to
// the minimum tick. pre: 0 < u < 1, lambda_t > 0.
Price limit_order_price(Side side, Price best_ask, Price best_bid, double lambda_t,
                        double u, bool ask_offset_inward = false);

// Runs the model for config.horizon steps and returns the per-step mid-price
// series. Identical (params, config, seed) triples give identical output on
// every platform.
MidPriceSeries simulate(const PgpsParams& params, const SimConfig& config, std::uint64_t seed);

}  // namespace fmcal
