#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fmcal {

enum class Side { Bid, Ask };

using OrderId = std::uint64_t;
using Price = std::int64_t;   // integer ticks, >= 1
using Volume = std::int64_t;  // >= 1 for live orders

struct Order {
    OrderId id = 0;
    Side side = Side::Bid;
    Price price = 0;
    Volume volume = 0;
    std::uint64_t arrival_seq = 0;  // stamped by the book on rest
};

// One fill against a resting order; price is the maker's price.
struct Trade {
    Price price = 0;
    Volume volume = 0;
    OrderId maker_id = 0;
};

struct MatchResult {
    std::vector<Trade> trades;
    std::optional<OrderId> resting_id;  // set when a remainder rested
    bool rejected = false;

    Volume traded_volume() const {
        Volume v = 0;
        for (const auto& t : trades) v += t.volume;
        return v;
    }
};

// Mid-price kept as twice its value so the half-tick case stays an exact
// integer.
struct MidPrice {
    std::int64_t twice = 0;
    double value() const { return 0.5 * static_cast<double>(twice); }
};

// Price-time-priority continuous double auction book. Matching walks the
// opposite side best-first, FIFO within a price level. Marketable limit
// orders execute first and rest any remainder; market orders never rest and
// are rejected outright when the opposite side is empty.
class OrderBook {
public:
    // pre: price >= 1, volume >= 1 (throws std::invalid_argument otherwise).
    // A reused id yields rejected=true and leaves the book untouched.
    MatchResult submit_limit(OrderId id, Side side, Price price, Volume volume = 1);

    MatchResult submit_market(Side side, Volume volume = 1);

    // True if the order was resting and is now removed. False for unknown
    // ids and for orders already fully executed or cancelled.
    bool cancel(OrderId id);

    // (best bid + best ask) / 2 while both sides are quoted; carries the
    // last defined value forward otherwise. Throws std::runtime_error if no
    // mid-price was ever defined.
    MidPrice mid_price();

    std::optional<Price> best_bid() const;
    std::optional<Price> best_ask() const;

    // Pointer valid until the next mutating call; nullptr if not resting.
    const Order* find(OrderId id) const;

    std::size_t open_orders() const { return index_.size(); }
    Volume resting_volume() const;

    // Orders in priority order: bids best-first, then asks best-first.
    std::vector<Order> snapshot() const;
    void dump_csv(std::ostream& out) const;

private:
    using Queue = std::list<Order>;

    struct Locator {
        Side side;
        Price price;
        Queue::iterator it;
    };

    template <typename LevelMap, typename Admissible>
    void consume(LevelMap& levels, Volume& remaining, std::vector<Trade>& trades,
                 Admissible admissible);

    std::map<Price, Queue, std::greater<Price>> bids_;
    std::map<Price, Queue> asks_;
    std::unordered_map<OrderId, Locator> index_;
    std::unordered_set<OrderId> used_ids_;
    std::uint64_t next_seq_ = 1;
    std::optional<std::int64_t> last_twice_mid_;
};

}  // namespace fmcal
