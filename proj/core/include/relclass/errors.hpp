#pragma once

#include <stdexcept>
#include <string>

namespace relclass {

// Error categories map onto CLI exit codes:
//   ConfigError -> 1, DataError -> 2, NumericError -> 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Shape mismatch in a tensor operation; message names both shapes.
struct DimensionError : NumericError {
  explicit DimensionError(const std::string& msg) : NumericError(msg) {}
};

}  // namespace relclass
