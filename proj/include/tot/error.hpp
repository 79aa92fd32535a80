#pragma once

#include <stdexcept>
#include <string>

namespace tot {

enum class ErrorCode {
  Parse,
  Io,
  NonManifold,
  Topology,
  InvalidArgument,
  Degenerate,
  DuplicateSites,
  SolverFailure,
  Flipped,
  Config,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tot
