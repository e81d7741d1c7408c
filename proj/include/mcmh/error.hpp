#pragma once

#include <stdexcept>
#include <string>

namespace mcmh {

// Malformed or missing input data (files, names, inconsistent artifacts).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcmh
