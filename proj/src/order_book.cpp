#include "fmcal/order_book.hpp"

#include <stdexcept>

namespace fmcal {

template <typename LevelMap, typename Admissible>
void OrderBook::consume(LevelMap& levels, Volume& remaining, std::vector<Trade>& trades,
                        Admissible admissible) {
    while (remaining > 0 && !levels.empty()) {
        auto level = levels.begin();  // best price first by map ordering
        if (!admissible(level->first)) break;
        Queue& queue = level->second;
        Order& maker = queue.front();
        const Volume traded = std::min(remaining, maker.volume);
        trades.push_back(Trade{maker.price, traded, maker.id});
        maker.volume -= traded;
        remaining -= traded;
        if (maker.volume == 0) {
            index_.erase(maker.id);
            queue.pop_front();
            if (queue.empty()) levels.erase(level);
        }
    }
}

MatchResult OrderBook::submit_limit(OrderId id, Side side, Price price, Volume volume) {
    if (price < 1) throw std::invalid_argument("limit price must be >= 1 tick");
    if (volume < 1) throw std::invalid_argument("order volume must be >= 1");
    MatchResult result;
    if (!used_ids_.insert(id).second) {
        result.rejected = true;
        return result;
    }
    Volume remaining = volume;
    if (side == Side::Bid) {
        consume(asks_, remaining, result.trades, [price](Price p) { return p <= price; });
    } else {
        consume(bids_, remaining, result.trades, [price](Price p) { return p >= price; });
    }
    if (remaining > 0) {
        Queue& queue = (side == Side::Bid) ? bids_[price] : asks_[price];
        queue.push_back(Order{id, side, price, remaining, next_seq_++});
        index_.emplace(id, Locator{side, price, std::prev(queue.end())});
        result.resting_id = id;
    }
    return result;
}

MatchResult OrderBook::submit_market(Side side, Volume volume) {
    if (volume < 1) throw std::invalid_argument("order volume must be >= 1");
    MatchResult result;
    const bool opposite_empty = (side == Side::Bid) ? asks_.empty() : bids_.empty();
    if (opposite_empty) {
        result.rejected = true;
        return result;
    }
    Volume remaining = volume;
    auto any = [](Price) { return true; };
    if (side == Side::Bid) {
        consume(asks_, remaining, result.trades, any);
    } else {
        consume(bids_, remaining, result.trades, any);
    }
    // remainder beyond total book depth is dropped, not rested
    return result;
}

bool OrderBook::cancel(OrderId id) {
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    const Locator& loc = it->second;
    if (loc.side == Side::Bid) {
        auto level = bids_.find(loc.price);
        level->second.erase(loc.it);
        if (level->second.empty()) bids_.erase(level);
    } else {
        auto level = asks_.find(loc.price);
        level->second.erase(loc.it);
        if (level->second.empty()) asks_.erase(level);
    }
    index_.erase(it);
    return true;
}

MidPrice OrderBook::mid_price() {
    if (!bids_.empty() && !asks_.empty()) {
        last_twice_mid_ = bids_.begin()->first + asks_.begin()->first;
    }
    if (!last_twice_mid_) {
        throw std::runtime_error("mid-price undefined: book has never had both sides quoted");
    }
    return MidPrice{*last_twice_mid_};
}

std::optional<Price> OrderBook::best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.begin()->first;
}

std::optional<Price> OrderBook::best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
}

const Order* OrderBook::find(OrderId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    return &*it->second.it;
}

Volume OrderBook::resting_volume() const {
    Volume total = 0;
    for (const auto& [price, queue] : bids_)
        for (const auto& o : queue) total += o.volume;
    for (const auto& [price, queue] : asks_)
        for (const auto& o : queue) total += o.volume;
    return total;
}

std::vector<Order> OrderBook::snapshot() const {
    std::vector<Order> out;
    out.reserve(index_.size());
    for (const auto& [price, queue] : bids_)
        for (const auto& o : queue) out.push_back(o);
    for (const auto& [price, queue] : asks_)
        for (const auto& o : queue) out.push_back(o);
    return out;
}

void OrderBook::dump_csv(std::ostream& out) const {
    out << "side,price,volume,arrival_seq\n";
    for (const auto& o : snapshot()) {
        out << (o.side == Side::Bid ? "bid" : "ask") << ',' << o.price << ',' << o.volume
            << ',' << o.arrival_seq << '\n';
    }
}

}  // namespace fmcal
