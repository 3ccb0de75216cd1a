#pragma once

#include <stdexcept>
#include <string>

namespace minipath {

// Malformed or inconsistent user input (files, config, arguments).
// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaxonomyErrorKind { kFormat, kCycle, kMultipleRoots, kDuplicateEdge, kOrphanComponent };

class TaxonomyError : public InputError {
 public:
  TaxonomyError(TaxonomyErrorKind kind, const std::string& what) : InputError(what), kind_(kind) {}
  TaxonomyErrorKind kind() const noexcept { return kind_; }

 private:
  TaxonomyErrorKind kind_;
};

// Tensor shapes disagree, e.g. a checkpoint built for other dimensions.
class ShapeError : public InputError {
 public:
  using InputError::InputError;
};

// Optimisation produced a non-finite loss or parameter.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace minipath
