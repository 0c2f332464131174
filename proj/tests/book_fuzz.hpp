#pragma once

// Differential driver: random operation sequences against both the engine
// and the reference matcher, checking every visible output plus the book
// invariants (never crossed, volume conserved).

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fmcal/order_book.hpp"
#include "fmcal/rng.hpp"
#include "reference_matcher.hpp"

namespace bookfuzz {

struct FuzzStats {
    std::uint64_t ops = 0;
    std::uint64_t trades = 0;
    std::uint64_t rested = 0;
    std::uint64_t cancels = 0;
    std::uint64_t rejected = 0;
};

// Runs episodes of fresh books; returns a description of the first mismatch,
// or nullopt when everything agreed.
inline std::optional<std::string> run(std::uint64_t seed, int episodes, int ops_per_episode,
                                      FuzzStats& stats) {
    using namespace fmcal;
    auto fail = [](int ep, int op, const std::string& what) {
        std::ostringstream os;
        os << "episode " << ep << " op " << op << ": " << what;
        return os.str();
    };

    for (int ep = 0; ep < episodes; ++ep) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ep)));
        OrderBook book;
        refbook::ReferenceBook ref;

        // regimes vary the price span, max volume, and op mix per episode
        const Price span = (ep % 3 == 0) ? 4 : (ep % 3 == 1) ? 40 : 400;
        const Volume vmax = (ep % 2 == 0) ? 1 : 4;
        const Price base = 1000;
        OrderId next_id = 1;
        std::vector<OrderId> known_ids;
        Volume expected_resting = 0;

        for (int op = 0; op < ops_per_episode; ++op) {
            ++stats.ops;
            const double pick = rng.u01();
            if (pick < 0.55) {
                const Side side = rng.u01() < 0.5 ? Side::Bid : Side::Ask;
                const Price px = std::max<Price>(
                    1, base - span + static_cast<Price>(rng.below(
                                         static_cast<std::uint64_t>(2 * span + 1))));
                const Volume vol = 1 + static_cast<Volume>(rng.below(
                                           static_cast<std::uint64_t>(vmax)));
                // occasionally reuse an id to hit the duplicate path
                OrderId id;
                if (!known_ids.empty() && rng.u01() < 0.02) {
                    id = known_ids[rng.below(known_ids.size())];
                } else {
                    id = next_id++;
                }
                const auto got = book.submit_limit(id, side, px, vol);
                const auto want = ref.submit_limit(id, side, px, vol);
                if (got.rejected != want.rejected)
                    return fail(ep, op, "limit rejected mismatch");
                if (got.rejected) {
                    ++stats.rejected;
                } else {
                    known_ids.push_back(id);
                    if (got.resting_id.has_value())
                        expected_resting += vol - got.traded_volume();
                }
                if (got.resting_id != want.resting_id)
                    return fail(ep, op, "limit resting_id mismatch");
                if (got.trades.size() != want.trades.size())
                    return fail(ep, op, "limit trade count mismatch");
                for (std::size_t k = 0; k < got.trades.size(); ++k) {
                    if (got.trades[k].price != want.trades[k].price ||
                        got.trades[k].volume != want.trades[k].volume ||
                        got.trades[k].maker_id != want.trades[k].maker_id)
                        return fail(ep, op, "limit trade detail mismatch");
                    expected_resting -= got.trades[k].volume;
                }
                if (got.resting_id) ++stats.rested;
                stats.trades += got.trades.size();
            } else if (pick < 0.80) {
                const Side side = rng.u01() < 0.5 ? Side::Bid : Side::Ask;
                const Volume vol = 1 + static_cast<Volume>(rng.below(
                                           static_cast<std::uint64_t>(vmax + 1)));
                const auto got = book.submit_market(side, vol);
                const auto want = ref.submit_market(side, vol);
                if (got.rejected != want.rejected)
                    return fail(ep, op, "market rejected mismatch");
                if (got.trades.size() != want.trades.size())
                    return fail(ep, op, "market trade count mismatch");
                for (std::size_t k = 0; k < got.trades.size(); ++k) {
                    if (got.trades[k].price != want.trades[k].price ||
                        got.trades[k].volume != want.trades[k].volume ||
                        got.trades[k].maker_id != want.trades[k].maker_id)
                        return fail(ep, op, "market trade detail mismatch");
                    expected_resting -= got.trades[k].volume;
                }
                if (got.rejected) ++stats.rejected;
                stats.trades += got.trades.size();
            } else {
                OrderId id;
                if (!known_ids.empty() && rng.u01() < 0.9) {
                    id = known_ids[rng.below(known_ids.size())];
                } else {
                    id = next_id + 100000;  // never-submitted id
                }
                const Order* live = book.find(id);
                const Volume remaining = live ? live->volume : 0;
                const bool got = book.cancel(id);
                const bool want = ref.cancel(id);
                if (got != want) return fail(ep, op, "cancel outcome mismatch");
                if (got) {
                    expected_resting -= remaining;
                    ++stats.cancels;
                }
            }

            // visible state must agree after every operation
            if (book.best_bid() != ref.best_bid()) return fail(ep, op, "best bid mismatch");
            if (book.best_ask() != ref.best_ask()) return fail(ep, op, "best ask mismatch");
            const auto ref_mid = ref.twice_mid();
            if (ref_mid) {
                if (book.mid_price().twice != *ref_mid)
                    return fail(ep, op, "mid-price mismatch");
            } else {
                try {
                    (void)book.mid_price();
                    return fail(ep, op, "mid-price defined but reference has none");
                } catch (const std::runtime_error&) {
                }
            }

            // invariants: never crossed, volume conserved
            const auto bid = book.best_bid();
            const auto ask = book.best_ask();
            if (bid && ask && *bid >= *ask) return fail(ep, op, "book crossed");
            if (book.resting_volume() != expected_resting)
                return fail(ep, op, "volume not conserved");

            if (op % 100 == 99) {
                const auto got_snap = book.snapshot();
                const auto want_snap = ref.snapshot();
                if (got_snap.size() != want_snap.size())
                    return fail(ep, op, "snapshot size mismatch");
                for (std::size_t k = 0; k < got_snap.size(); ++k) {
                    if (got_snap[k].id != want_snap[k].id ||
                        got_snap[k].price != want_snap[k].price ||
                        got_snap[k].volume != want_snap[k].volume ||
                        got_snap[k].arrival_seq != want_snap[k].arrival_seq)
                        return fail(ep, op, "snapshot order mismatch");
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace bookfuzz
