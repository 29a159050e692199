#include "coag2d/records.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"

namespace coag2d {

using nlohmann::json;

std::string event_to_json(const EventRecord& ev) {
  json j = {{"t", ev.t},     {"i", ev.i},     {"j", ev.j},
            {"m_i", ev.m_i}, {"m_j", ev.m_j}, {"kept", ev.kept_i ? "i" : "j"}};
  return j.dump();
}

EventRecord event_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    EventRecord ev;
    ev.t = j.at("t").get<double>();
    ev.i = j.at("i").get<ParticleId>();
    ev.j = j.at("j").get<ParticleId>();
    ev.m_i = j.at("m_i").get<Mass>();
    ev.m_j = j.at("m_j").get<Mass>();
    const auto kept = j.at("kept").get<std::string>();
    if (kept != "i" && kept != "j") throw ValidationError("kept must be \"i\" or \"j\"");
    ev.kept_i = kept == "i";
    return ev;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad event record: ") + e.what());
  }
}

std::string snapshot_to_json(const Configuration& cfg) {
  json pos = json::array(), mass = json::array();
  for (const auto& e : cfg.entries()) {
    pos.push_back({e.particle.position.x, e.particle.position.y});
    mass.push_back(e.particle.mass);
  }
  json j = {{"t", cfg.time()}, {"n", cfg.size()}, {"positions", pos}, {"masses", mass}};
  return j.dump();
}

Configuration snapshot_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    const auto& pos = j.at("positions");
    const auto n = j.at("n").get<std::size_t>();
    if (pos.size() != n) throw ValidationError("snapshot n does not match positions");
    const bool has_mass = j.contains("masses");
    if (has_mass && j.at("masses").size() != n)
      throw ValidationError("snapshot masses do not match positions");
    std::vector<Particle> ps;
    ps.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      Particle p;
      p.position = {pos[k].at(0).get<double>(), pos[k].at(1).get<double>()};
      p.mass = has_mass ? j.at("masses")[k].get<Mass>() : 1;
      ps.push_back(p);
    }
    return Configuration(std::move(ps), j.at("t").get<double>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad snapshot record: ") + e.what());
  }
}

void write_events_jsonl(std::ostream& os, const EventLog& log) {
  for (const auto& ev : log) os << event_to_json(ev) << '\n';
}

EventLog read_events_jsonl(std::istream& is) {
  EventLog log;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) log.push_back(event_from_json(line));
  return log;
}

void write_snapshots_jsonl(std::ostream& os, const std::vector<Snapshot>& snaps) {
  for (const auto& s : snaps) os << snapshot_to_json(s.cfg) << '\n';
}

std::vector<Snapshot> read_snapshots_jsonl(std::istream& is) {
  std::vector<Snapshot> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto c = snapshot_from_json(line);
    const double t = c.time();
    out.push_back({t, std::move(c)});
  }
  return out;
}

}  // namespace coag2d
