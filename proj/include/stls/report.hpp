#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stls {

enum class Outcome {
    done,
    spec_incompatible,  // handshake rejected the job
    transport,          // stream/frame failure
    protocol,           // peer broke the message discipline
    validation,         // G-code rejected or printer errored
    geometry,           // mesh/slicing failure (also I/O)
};

// Line-delimited job summary written by both session sides.
struct JobReport {
    std::string role;  // "client" or "manufacturer"
    Outcome outcome = Outcome::done;
    std::string status = "done";
    uint32_t layers_total = 0;
    uint32_t layers_printed = 0;  // served (client) / fed to the printer (manufacturer)
    uint64_t bytes_sent = 0, bytes_received = 0;
    std::vector<double> layer_seconds;
    double total_extruded_length = 0;  // manufacturer side, from printer records
    std::string validation_summary;
    std::string dwell_summary;
    std::string ledger_digest;

    bool ok() const { return outcome == Outcome::done; }
    int exit_code() const;
    std::string to_text() const;
};

}  // namespace stls
