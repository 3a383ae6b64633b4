#include "fq/free_energy/neq.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "fq/error.hpp"

namespace fq::free_energy {

WorkRecord neq_switch(const sampling::Surface& from, const sampling::Surface& to, std::span<const double> start,
                      const SwitchProtocol& protocol, Direction direction, std::uint64_t seed,
                      const model::ThermoState& state, std::size_t snapshot_id) {
  if (protocol.switch_steps == 0) throw ValidationError("switch_steps must be at least 1");
  const auto n = static_cast<double>(protocol.switch_steps);
  const bool fwd = direction == Direction::forward;
  auto s_at = [&](std::size_t i) { return fwd ? static_cast<double>(i) / n : 1.0 - static_cast<double>(i) / n; };

  // Both endpoint energies at the current coordinates, cached by the mixed field.
  double e_from = 0.0;
  double e_to = 0.0;
  double s = s_at(0);
  sampling::ForceFn mixed = [&](std::span<const double> x) {
    auto a = from.evaluate(x);
    auto b = to.evaluate(x);
    e_from = a.energy;
    e_to = b.energy;
    model::EnergyForces out;
    out.energy = (1.0 - s) * a.energy + s * b.energy;
    out.forces.resize(a.forces.size());
    for (std::size_t c = 0; c < out.forces.size(); ++c) out.forces[c] = (1.0 - s) * a.forces[c] + s * b.forces[c];
    return out;
  };

  sampling::LangevinIntegrator integrator(from.masses, std::vector<double>(start.begin(), start.end()), state.beta,
                                          protocol.dt, protocol.gamma, seed, snapshot_id);
  integrator.refresh(mixed);

  WorkRecord rec;
  rec.direction = direction;
  rec.snapshot_id = snapshot_id;
  rec.protocol_id = protocol.id;
  rec.seed = seed;
  rec.start_energy = integrator.energy();
  for (std::size_t i = 0; i < protocol.switch_steps; ++i) {
    const double s_next = s_at(i + 1);
    rec.work += (s_next - s) * (e_to - e_from);
    s = s_next;
    integrator.refresh(mixed);
    const double before = integrator.energy();
    integrator.step(mixed);
    const double after = integrator.energy();
    if (!std::isfinite(after)) throw UnstableIntegration("unstable integration during switch", i + 1);
    rec.heat += after - before;
  }
  rec.end_energy = integrator.energy();
  return rec;
}

void write_work_records_csv(std::span<const WorkRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write work records to " + path.string());
  out << "direction,work,seed,snapshot_id\n";
  for (const auto& r : records) {
    out << to_string(r.direction) << ',' << fmt::format("{}", r.work) << ',' << r.seed << ',' << r.snapshot_id << '\n';
  }
}

std::vector<WorkRecord> read_work_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read work records from " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "direction,work,seed,snapshot_id") throw ParseError("bad work record header", 1);
  std::vector<WorkRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string dir;
    std::string work;
    std::string seed;
    std::string snap;
    std::getline(ss, dir, ',');
    std::getline(ss, work, ',');
    std::getline(ss, seed, ',');
    std::getline(ss, snap, ',');
    WorkRecord r;
    if (dir == "forward") {
      r.direction = Direction::forward;
    } else if (dir == "backward") {
      r.direction = Direction::backward;
    } else {
      throw ParseError("unknown work direction '" + dir + "'", lineno);
    }
    try {
      r.work = std::stod(work);
      r.seed = std::stoull(seed);
      r.snapshot_id = std::stoull(snap);
    } catch (const std::exception&) {
      throw ParseError("malformed work record", lineno);
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace fq::free_energy
