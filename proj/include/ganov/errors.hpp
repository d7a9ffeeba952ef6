#ifndef GANOV_ERRORS_HPP
#define GANOV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ganov {

// Bad user input: malformed config, out-of-range values, missing files.
// CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training. CLI maps these to exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, long step)
      : std::runtime_error(msg + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace ganov

#endif
