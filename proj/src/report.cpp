#include "stls/report.hpp"

#include <sstream>

namespace stls {

namespace {

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::done: return "done";
        case Outcome::spec_incompatible: return "spec-incompatible";
        case Outcome::transport: return "transport";
        case Outcome::protocol: return "protocol";
        case Outcome::validation: return "validation";
        case Outcome::geometry: return "geometry";
    }
    return "?";
}

}  // namespace

int JobReport::exit_code() const {
    switch (outcome) {
        case Outcome::done: return 0;
        case Outcome::spec_incompatible: return 2;
        case Outcome::transport:
        case Outcome::protocol: return 3;
        default: return 4;
    }
}

std::string JobReport::to_text() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "role=" << role << "\n"
        << "outcome=" << outcome_name(outcome) << "\n"
        << "status=" << status << "\n"
        << "layers_total=" << layers_total << "\n"
        << "layers_printed=" << layers_printed << "\n"
        << "bytes_sent=" << bytes_sent << "\n"
        << "bytes_received=" << bytes_received << "\n"
        << "total_extruded_length=" << total_extruded_length << "\n";
    for (size_t i = 0; i < layer_seconds.size(); ++i)
        out << "layer_seconds_" << i << "=" << layer_seconds[i] << "\n";
    if (!validation_summary.empty()) out << "validation=" << validation_summary << "\n";
    if (!dwell_summary.empty()) out << "dwell=" << dwell_summary << "\n";
    if (!ledger_digest.empty()) out << "ledger=" << ledger_digest << "\n";
    return out.str();
}

}  // namespace stls
