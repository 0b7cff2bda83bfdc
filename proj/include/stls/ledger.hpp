#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stls/geom.hpp"

namespace stls {

enum class ArtifactKind { stl, gcode };

struct LedgerEvent {
    uint64_t seq;
    enum class Action { store, remove } action;
    ArtifactKind kind;
    uint32_t layer;
};

// Auditable record of what the manufacturer retains. The retention contract:
// at most two layers of each artifact kind resident, and layer n removed
// before layer n+2 is requested.
class StorageLedger {
public:
    void store(ArtifactKind kind, uint32_t layer);
    void remove(ArtifactKind kind, uint32_t layer);

    size_t resident(ArtifactKind kind) const;
    size_t max_resident() const { return max_resident_; }
    const std::vector<LedgerEvent>& events() const { return events_; }

    // Replays the event log and re-derives the invariants; throws on violation.
    void audit() const;

    std::string digest() const;  // short summary line for reports

private:
    std::vector<LedgerEvent> events_;
    uint64_t next_seq_ = 0;
    size_t max_resident_ = 0;
};

}  // namespace stls
