#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pimfit {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2, DataError -> 3, SolverError/NumericalError -> 4.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Rank-deficient or otherwise unusable design.
class DesignError : public std::runtime_error {
public:
  explicit DesignError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Non-convergence; carries the last iterate for post-mortems.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, std::vector<double> last_beta,
              double last_score_norm)
      : std::runtime_error(what),
        last_beta(std::move(last_beta)),
        last_score_norm(last_score_norm) {}

  std::vector<double> last_beta;
  double last_score_norm = 0.0;
};

// A piece fit inside partition/subsample aggregation failed; names the piece.
class AggregationError : public std::runtime_error {
public:
  AggregationError(const std::string& what, std::size_t piece_index)
      : std::runtime_error(what), piece_index(piece_index) {}

  std::size_t piece_index = 0;
};

}  // namespace pimfit
