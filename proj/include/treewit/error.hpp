#pragma once

#include <stdexcept>
#include <string>

namespace treewit {

/// Error thrown on invalid inputs, refused requests (over a hard cap) and
/// violated internal invariants. The message says which.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace treewit
