#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prime {

enum class Errc {
  capacity_exceeded,
  overflow,
  malformed_snapshot,
  graph_too_large,
  no_route,
  too_many_paths,
  parse_error,
  version_unsupported,
  invalid_params,
  unknown_token,
};

std::string_view errc_name(Errc code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace prime
