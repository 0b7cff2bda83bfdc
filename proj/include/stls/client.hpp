#pragma once

#include <memory>

#include "stls/config.hpp"
#include "stls/framing.hpp"
#include "stls/geom.hpp"
#include "stls/report.hpp"
#include "stls/sectioner.hpp"

namespace stls {

struct ClientOptions {
    RigidTransform orientation;  // applied before dropping to the bed
    bool supports = true;
    SupportSpec support_spec;
    GuideSpec guide_spec;
};

// Design-side session: spec handshake, local sectioning, then serving one
// layer STL per manufacturer request. Never sends ahead of a request; aborts
// on any out-of-order request (one repeat of the last served index is allowed
// for corruption recovery). All failures are reported through the returned
// JobReport rather than thrown.
JobReport run_client(const Mesh& mesh, const PrintConfig& config,
                     std::shared_ptr<ByteStream> stream, const ClientOptions& opts = {});

}  // namespace stls
