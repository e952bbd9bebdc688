#include "sdfforge/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sdfforge/error.hpp"

namespace sdfforge {

namespace {

void put(std::string& buf, double x) {
  char tmp[32];
  const int n = std::snprintf(tmp, sizeof(tmp), "%.17g", x);
  buf.push_back(' ');
  buf.append(tmp, n);
}

}  // namespace

void write_trace(std::ostream& out, const std::vector<ParticleSnapshot>& snapshots, double dt) {
  const std::size_t last = snapshots.empty() ? 0 : snapshots.back().particles.size();
  const int steps = snapshots.empty() ? 0 : static_cast<int>(snapshots.size()) - 1;
  std::string header = "sdf-forge-trace 1\nparticles " + std::to_string(last) + " dt";
  put(header, dt);
  header += " steps " + std::to_string(steps) + "\n";
  out << header;
  std::string line;
  for (const auto& s : snapshots) {
    line = std::to_string(s.step);
    put(line, s.time);
    line += ' ' + std::to_string(s.particles.size());
    for (const auto& p : s.particles) {
      put(line, p.position.x);
      put(line, p.position.y);
      put(line, p.position.z);
      put(line, p.velocity.x);
      put(line, p.velocity.y);
      put(line, p.velocity.z);
    }
    line += '\n';
    out << line;
  }
}

void write_trace(const std::filesystem::path& path, const std::vector<ParticleSnapshot>& snapshots, double dt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace " + path.string());
  write_trace(out, snapshots, dt);
  if (!out) throw IoError("short write on trace " + path.string());
}

namespace {

class Tokens {
 public:
  explicit Tokens(const std::string& line) : p_(line.data()), end_(line.data() + line.size()) {}

  template <class T>
  T next(int lineno) {
    while (p_ < end_ && *p_ == ' ') ++p_;
    T v{};
    const auto r = std::from_chars(p_, end_, v);
    if (r.ec != std::errc{}) throw IoError("trace line " + std::to_string(lineno) + ": bad number");
    p_ = r.ptr;
    return v;
  }

 private:
  const char* p_;
  const char* end_;
};

}  // namespace

std::vector<ParticleSnapshot> read_trace(std::istream& in, TraceHeader* header) {
  std::string line;
  if (!std::getline(in, line) || line != "sdf-forge-trace 1") throw IoError("not an sdf-forge trace");
  if (!std::getline(in, line)) throw IoError("trace header missing");
  TraceHeader h;
  {
    std::istringstream ss(line);
    std::string k1, k2, k3;
    if (!(ss >> k1 >> h.particles >> k2 >> h.dt >> k3 >> h.steps) || k1 != "particles" || k2 != "dt" ||
        k3 != "steps") {
      throw IoError("malformed trace header");
    }
  }
  std::vector<ParticleSnapshot> out;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Tokens tok(line);
    ParticleSnapshot s;
    s.step = tok.next<int>(lineno);
    s.time = tok.next<double>(lineno);
    const auto n = tok.next<std::size_t>(lineno);
    s.particles.resize(n);
    for (auto& p : s.particles) {
      p.position.x = tok.next<double>(lineno);
      p.position.y = tok.next<double>(lineno);
      p.position.z = tok.next<double>(lineno);
      p.velocity.x = tok.next<double>(lineno);
      p.velocity.y = tok.next<double>(lineno);
      p.velocity.z = tok.next<double>(lineno);
    }
    out.push_back(std::move(s));
  }
  if (static_cast<int>(out.size()) != h.steps + 1) throw IoError("trace snapshot count disagrees with header");
  if (header) *header = h;
  return out;
}

std::vector<ParticleSnapshot> read_trace(const std::filesystem::path& path, TraceHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read trace " + path.string());
  return read_trace(in, header);
}

}  // namespace sdfforge
