#pragma once

#include <memory>
#include <string>

#include "stls/config.hpp"
#include "stls/framing.hpp"
#include "stls/ledger.hpp"
#include "stls/printer_sim.hpp"
#include "stls/report.hpp"

namespace stls {

struct ServerOptions {
    std::string workdir;        // per-layer artifact sandbox; empty = in-memory only
    int pipeline_depth = 2;     // 1 reproduces the fetch-latency dwell defect
    double fetch_latency_sim = 0;  // injected per-fetch cost, printer sim seconds
};

// Manufacturer side of one job on an accepted connection: spec/config
// handshake, pull-based layer fetching with depth-2 prefetch, slice +
// redundant-command strip + validation per layer, line/ack streaming to the
// printer, and delete-after-print retention recorded in the ledger. Failures
// are reported through the returned JobReport.
JobReport run_manufacturer_session(std::shared_ptr<ByteStream> stream,
                                   const MachineSpec& machine, PrinterChannel& printer,
                                   const ServerOptions& opts = {},
                                   StorageLedger* ledger_out = nullptr);

}  // namespace stls
