#pragma once

// Line-delimited JSON for event logs and configuration snapshots. Doubles are
// written in shortest round-trip form, so reading back is bit-exact.

#include <iosfwd>
#include <string>

#include "coag2d/sim.hpp"

namespace coag2d {

/// {"t":..,"i":..,"j":..,"m_i":..,"m_j":..,"kept":"i"|"j"}
std::string event_to_json(const EventRecord& ev);
EventRecord event_from_json(const std::string& line);

/// {"t":..,"n":..,"positions":[[x,y],...],"masses":[...]}
std::string snapshot_to_json(const Configuration& cfg);
Configuration snapshot_from_json(const std::string& line);

void write_events_jsonl(std::ostream& os, const EventLog& log);
EventLog read_events_jsonl(std::istream& is);
void write_snapshots_jsonl(std::ostream& os, const std::vector<Snapshot>& snaps);
std::vector<Snapshot> read_snapshots_jsonl(std::istream& is);

}  // namespace coag2d
