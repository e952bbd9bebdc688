#pragma once

#include <stdexcept>
#include <string>

namespace sdfforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration or scene schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class SimulationDiverged : public Error {
 public:
  explicit SimulationDiverged(int step)
      : Error("simulation diverged at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class SequenceTooShort : public Error {
 public:
  using Error::Error;
};

class EmptyBenchmark : public Error {
 public:
  using Error::Error;
};

// Two predictions for the same (item, run).
class AmbiguousLog : public Error {
 public:
  using Error::Error;
};

// A prediction log line that is not valid JSON or lacks required fields.
class MalformedLog : public Error {
 public:
  MalformedLog(int line, const std::string& detail)
      : Error("malformed prediction log at line " + std::to_string(line) + ": " + detail), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class PoolShortfall : public Error {
 public:
  using Error::Error;
};

// Missing file referenced from a manifest.
class IntegrityError : public Error {
 public:
  IntegrityError(const std::string& path, const std::string& detail)
      : Error(detail + ": " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class PortInUse : public Error {
 public:
  using Error::Error;
};

}  // namespace sdfforge
