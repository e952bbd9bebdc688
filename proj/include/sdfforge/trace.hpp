#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sdfforge/sim.hpp"

namespace sdfforge {

// Text particle trace:
//   sdf-forge-trace 1
//   particles <count in last snapshot> dt <seconds> steps <steps>
//   <step> <time> <n> x y z vx vy vz ...      (one line per snapshot, n sextuples)
// Numbers are printed with 17 significant digits and read back bit-exactly.
struct TraceHeader {
  std::size_t particles = 0;
  double dt = 0.0;
  int steps = 0;
};

void write_trace(std::ostream& out, const std::vector<ParticleSnapshot>& snapshots, double dt);
void write_trace(const std::filesystem::path& path, const std::vector<ParticleSnapshot>& snapshots, double dt);

// Throws IoError on malformed input.
std::vector<ParticleSnapshot> read_trace(std::istream& in, TraceHeader* header = nullptr);
std::vector<ParticleSnapshot> read_trace(const std::filesystem::path& path, TraceHeader* header = nullptr);

}  // namespace sdfforge
