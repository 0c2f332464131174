#include "fmcal/pgps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace fmcal {

namespace {

// sub-stream tags for seed derivation; order is part of the output contract
constexpr std::uint64_t kStreamMsd = 1;
constexpr std::uint64_t kStreamProvider = 2;
constexpr std::uint64_t kStreamTaker = 3;
constexpr std::uint64_t kStreamCancel = 4;
constexpr std::uint64_t kStreamQWalk = 5;
constexpr std::uint64_t kStreamShuffle = 6;

constexpr OrderId kSentinelBid = 1;
constexpr OrderId kSentinelAsk = 2;

// Resting non-sentinel orders eligible for random cancellation. Swap-remove
// keeps selection O(1) without disturbing determinism: contents are a pure
// function of the operation history.
class CancelPool {
public:
    void insert(OrderId id) {
        pos_[id] = ids_.size();
        ids_.push_back(id);
    }
    void erase_if_present(OrderId id) {
        auto it = pos_.find(id);
        if (it == pos_.end()) return;
        erase_at(it->second);
    }
    void erase_at(std::size_t k) {
        const OrderId last = ids_.back();
        pos_[last] = k;
        std::swap(ids_[k], ids_.back());
        pos_.erase(ids_.back());
        ids_.pop_back();
    }
    OrderId at(std::size_t k) const { return ids_[k]; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

private:
    std::vector<OrderId> ids_;
    std::unordered_map<OrderId, std::size_t> pos_;
};

void validate(const PgpsParams& p, const SimConfig& cfg) {
    auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!prob(p.alpha) || !prob(p.mu) || !prob(p.delta))
        throw std::invalid_argument("alpha, mu, delta must lie in [0, 1]");
    if (!(p.delta_s >= 0.0)) throw std::invalid_argument("delta_s must be >= 0");
    if (!(p.lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
    if (!(p.c_lambda >= 0.0)) throw std::invalid_argument("c_lambda must be >= 0");
    if (cfg.n_agents < 1) throw std::invalid_argument("n_agents must be >= 1");
    if (cfg.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (cfg.initial_price < 2)
        throw std::invalid_argument("initial_price must leave room for a bid below it");
    if (cfg.msd_samples < 1) throw std::invalid_argument("msd_samples must be >= 1");
    if (!(cfg.msd_floor > 0.0)) throw std::invalid_argument("msd_floor must be positive");
}

}  // namespace

PgpsParams PgpsParams::from_array(std::span<const double> v) {
    if (v.size() != kDim) throw std::invalid_argument("parameter vector must have 6 entries");
    PgpsParams p;
    p.alpha = v[0];
    p.mu = v[1];
    p.delta = v[2];
    p.delta_s = v[3];
    p.lambda0 = v[4];
    p.c_lambda = v[5];
    return p;
}

const std::array<std::string, PgpsParams::kDim>& param_names() {
    static const std::array<std::string, PgpsParams::kDim> names = {
        "alpha", "mu", "delta", "delta_s", "lambda0", "c_lambda"};
    return names;
}

std::array<std::pair<double, double>, PgpsParams::kDim> default_bounds() {
    return {{{0.05, 0.2}, {0.0, 0.05}, {0.0, 0.05}, {0.0, 0.005}, {50.0, 300.0}, {1.0, 50.0}}};
}

double step_q_taker_branch(double q, double delta_s, bool approach) {
    // at q = 1/2 either direction is "toward the mean"; pick +delta_s
    const double toward = (q > 0.5) ? -delta_s : delta_s;
    const double step = approach ? toward : -toward;
    return std::clamp(q + step, 0.0, 1.0);
}

double step_q_taker(double q, double delta_s, Rng& rng) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in [0, 1]");
    if (!(delta_s >= 0.0)) throw std::invalid_argument("delta_s must be >= 0");
    const double p_approach = 0.5 + std::abs(q - 0.5);
    return step_q_taker_branch(q, delta_s, rng.u01() < p_approach);
}

double estimate_msd(double delta_s, int samples, Rng& rng, double floor_value) {
    if (samples < 1) throw std::invalid_argument("msd samples must be >= 1");
    if (!(floor_value > 0.0)) throw std::invalid_argument("msd floor must be positive");
    if (delta_s == 0.0) return floor_value;  // walk never leaves 1/2
    double q = 0.5;
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
        q = step_q_taker(q, delta_s, rng);
        const double d = q - 0.5;
        acc += d * d;
    }
    return std::max(acc / samples, floor_value);
}

double lambda_depth(double lambda0, double c_lambda, double q, double msd) {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
    if (!(msd > 0.0)) throw std::invalid_argument("msd must be positive");
    return lambda0 * (1.0 + std::abs(q - 0.5) / std::sqrt(msd) * c_lambda);
}

Price limit_order_price(Side side, Price best_ask, Price best_bid, double lambda_t,
                        double u, bool ask_offset_inward) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("u must lie strictly in (0, 1)");
    if (!(lambda_t > 0.0)) throw std::invalid_argument("lambda_t must be positive");
    const Price offset = static_cast<Price>(std::floor(-lambda_t * std::log(u)));
    Price px;
    if (side == Side::Bid) {
        px = best_ask - 1 - offset;
    } else {
        px = ask_offset_inward ? best_bid + 1 - offset : best_bid + 1 + offset;
    }
    return std::max<Price>(px, 1);
}

MidPriceSeries simulate(const PgpsParams& params, const SimConfig& config, std::uint64_t seed) {
    validate(params, config);

    // Stream split order is fixed; adding a stream later must append a tag,
    // never renumber.
    Rng msd_rng(derive_seed(seed, kStreamMsd));
    Rng provider_rng(derive_seed(seed, kStreamProvider));
    Rng taker_rng(derive_seed(seed, kStreamTaker));
    Rng cancel_rng(derive_seed(seed, kStreamCancel));
    Rng qwalk_rng(derive_seed(seed, kStreamQWalk));
    Rng shuffle_rng(derive_seed(seed, kStreamShuffle));

    const double msd =
        estimate_msd(params.delta_s, config.msd_samples, msd_rng, config.msd_floor);

    OrderBook book;
    book.submit_limit(kSentinelBid, Side::Bid, config.initial_price - 1, 1);
    book.submit_limit(kSentinelAsk, Side::Ask, config.initial_price + 1, 1);
    book.mid_price();  // prime the carry-forward value while both sides exist

    CancelPool pool;
    OrderId next_id = kSentinelAsk + 1;
    double q = 0.5;
    const int n = config.n_agents;

    MidPriceSeries out;
    out.seed = seed;
    out.params = params;
    out.values.reserve(config.horizon);

    double lambda_t = 0.0;

    auto on_trades = [&](const MatchResult& res) {
        for (const auto& tr : res.trades) {
            if (book.find(tr.maker_id) == nullptr) pool.erase_if_present(tr.maker_id);
        }
    };

    auto provider_act = [&]() {
        if (provider_rng.u01() >= params.alpha) return;
        const Side side = provider_rng.u01() < 0.5 ? Side::Bid : Side::Ask;
        const double u = provider_rng.open01();
        const auto ask = book.best_ask();
        const auto bid = book.best_bid();
        // a quote is priced off the far touch; without one the submission is
        // skipped (the draw above is still consumed)
        if (side == Side::Bid && !ask) return;
        if (side == Side::Ask && !bid) return;
        const Price px = limit_order_price(side, ask.value_or(0), bid.value_or(0),
                                           lambda_t, u, config.ask_offset_inward);
        const MatchResult res = book.submit_limit(next_id++, side, px, 1);
        if (res.resting_id) pool.insert(*res.resting_id);
        on_trades(res);
    };

    auto taker_act = [&]() {
        if (taker_rng.u01() >= params.mu) return;
        const Side side = taker_rng.u01() < q ? Side::Bid : Side::Ask;
        on_trades(book.submit_market(side, 1));
    };

    auto cancel_act = [&]() {
        if (cancel_rng.u01() >= params.delta) return;
        if (pool.empty()) return;
        const std::size_t k =
            static_cast<std::size_t>(cancel_rng.below(pool.size()));
        book.cancel(pool.at(k));
        pool.erase_at(k);
    };

    // A fully emptied book would leave every future quote unpriceable and the
    // market dead for the rest of the run; reseed the sentinel pair around
    // the carried mid so trading can resume. Consumes no draws, so runs that
    // never die are unaffected.
    auto reseed_if_dead = [&]() {
        if (book.best_bid() || book.best_ask()) return;
        const std::int64_t twice = book.mid_price().twice;
        Price bid_px = (twice % 2 == 0) ? twice / 2 - 1 : (twice - 1) / 2;
        bid_px = std::max<Price>(bid_px, 1);
        const Price ask_px = std::max<Price>((twice % 2 == 0) ? twice / 2 + 1 : (twice + 1) / 2,
                                             bid_px + 1);
        book.submit_limit(next_id++, Side::Bid, bid_px, 1);
        book.submit_limit(next_id++, Side::Ask, ask_px, 1);
    };

    std::vector<std::uint8_t> slots;
    if (config.shuffle_agents) slots.resize(static_cast<std::size_t>(2) * n);

    for (int t = 0; t < config.horizon; ++t) {
        reseed_if_dead();
        lambda_t = lambda_depth(params.lambda0, params.c_lambda, q, msd);

        if (!config.shuffle_agents) {
            for (int i = 0; i < n; ++i) provider_act();
            for (int i = 0; i < n; ++i) taker_act();
        } else {
            for (int i = 0; i < n; ++i) slots[i] = 0;
            for (int i = 0; i < n; ++i) slots[n + i] = 1;
            for (std::size_t i = slots.size() - 1; i > 0; --i) {
                const std::size_t j = static_cast<std::size_t>(shuffle_rng.below(i + 1));
                std::swap(slots[i], slots[j]);
            }
            for (const auto s : slots) s == 0 ? provider_act() : taker_act();
        }
        for (int i = 0; i < n; ++i) cancel_act();

        q = step_q_taker(q, params.delta_s, qwalk_rng);
        out.values.push_back(book.mid_price().value());
    }
    return out;
}

}  // namespace fmcal
