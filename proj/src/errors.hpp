#pragma once

#include <stdexcept>
#include <string>

namespace bdsde {

// Non-finite value produced during simulation or regression.  Carries the
// (time step, sample) pair that triggered the abort.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t step, std::size_t sample)
      : std::runtime_error(what + " (step " + std::to_string(step) +
                           ", sample " + std::to_string(sample) + ")"),
        step_(step),
        sample_(sample) {}

  std::size_t step() const { return step_; }
  std::size_t sample() const { return sample_; }

 private:
  std::size_t step_;
  std::size_t sample_;
};

// Invalid experiment configuration; message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bdsde
