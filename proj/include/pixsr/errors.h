#ifndef PIXSR_ERRORS_H_
#define PIXSR_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pixsr {

// Operand shapes do not agree (vector length vs layer input, guide channels
// vs network input, ...).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Image sizes are inconsistent with the upsampling factor.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A backward pass was requested with a cache that does not belong to the
// parameters it is run against.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a NaN/Inf objective.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int iteration, double loss);

  int iteration() const { return iteration_; }
  double loss() const { return loss_; }

 private:
  int iteration_;
  double loss_;
};

}  // namespace pixsr

#endif  // PIXSR_ERRORS_H_
