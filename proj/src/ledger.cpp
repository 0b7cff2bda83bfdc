#include "stls/ledger.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace stls {

void StorageLedger::store(ArtifactKind kind, uint32_t layer) {
    events_.push_back({next_seq_++, LedgerEvent::Action::store, kind, layer});
    size_t r = std::max(resident(ArtifactKind::stl), resident(ArtifactKind::gcode));
    max_resident_ = std::max(max_resident_, r);
}

void StorageLedger::remove(ArtifactKind kind, uint32_t layer) {
    events_.push_back({next_seq_++, LedgerEvent::Action::remove, kind, layer});
}

size_t StorageLedger::resident(ArtifactKind kind) const {
    std::set<uint32_t> live;
    for (const auto& e : events_) {
        if (e.kind != kind) continue;
        if (e.action == LedgerEvent::Action::store) live.insert(e.layer);
        else live.erase(e.layer);
    }
    return live.size();
}

void StorageLedger::audit() const {
    std::set<uint32_t> live_stl, live_gcode;
    for (const auto& e : events_) {
        auto& live = e.kind == ArtifactKind::stl ? live_stl : live_gcode;
        if (e.action == LedgerEvent::Action::store) {
            live.insert(e.layer);
            if (live.size() > 2)
                throw Error("ledger: more than 2 resident " +
                            std::string(e.kind == ArtifactKind::stl ? "STL" : "G-code") +
                            " artifacts after storing layer " + std::to_string(e.layer));
            // Layer n must be gone before layer n+2 appears.
            for (uint32_t l : live)
                if (l + 2 <= e.layer)
                    throw Error("ledger: layer " + std::to_string(l) +
                                " still resident when layer " + std::to_string(e.layer) +
                                " was stored");
        } else {
            if (!live.count(e.layer))
                throw Error("ledger: delete of non-resident layer " +
                            std::to_string(e.layer));
            live.erase(e.layer);
        }
    }
    if (!live_stl.empty() || !live_gcode.empty())
        throw Error("ledger: artifacts remain resident after job end");
}

std::string StorageLedger::digest() const {
    std::ostringstream out;
    size_t stores = 0, removes = 0;
    for (const auto& e : events_)
        (e.action == LedgerEvent::Action::store ? stores : removes)++;
    out << "events=" << events_.size() << " stores=" << stores << " deletes=" << removes
        << " max_resident=" << max_resident_;
    return out.str();
}

}  // namespace stls
