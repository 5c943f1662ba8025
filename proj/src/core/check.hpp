#pragma once

#include <stdexcept>
#include <string>

namespace mealgen {

// Runtime contract violation with a human-readable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace mealgen
