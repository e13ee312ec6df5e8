#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pimfit/errors.hpp"

namespace pimfit {

// Columnar numeric table: response y plus an n x d covariate block.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index d() const { return x.cols(); }

  Eigen::Index column_index(const std::string& name) const {
    for (std::size_t c = 0; c < column_names.size(); ++c) {
      if (column_names[c] == name) return static_cast<Eigen::Index>(c);
    }
    throw ConfigError("unknown column '" + name + "'");
  }

  void validate() const {
    if (y.size() < 2) throw DataError("dataset needs at least 2 rows");
    if (x.cols() < 1) throw DataError("dataset needs at least 1 covariate");
    if (x.rows() != y.size())
      throw DataError("response/covariate row counts differ");
    if (static_cast<Eigen::Index>(column_names.size()) != x.cols())
      throw DataError("column name count does not match covariate count");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (!std::isfinite(y[i])) throw DataError("non-finite response value");
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!std::isfinite(x(i, j)))
          throw DataError("non-finite value in column '" + column_names[j] + "'");
      }
    }
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.column_names = column_names;
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto src = static_cast<Eigen::Index>(rows[r]);
      out.y[static_cast<Eigen::Index>(r)] = y[src];
      out.x.row(static_cast<Eigen::Index>(r)) = x.row(src);
    }
    return out;
  }
};

// FNV-1a over the raw numeric contents; used for the shared-data checks in
// the simulation harness.
inline std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data,
                                 std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t dataset_hash(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a_bytes(h, data.y.data(), sizeof(double) * data.y.size());
  h = fnv1a_bytes(h, data.x.data(),
                  sizeof(double) * static_cast<std::size_t>(data.x.size()));
  for (const auto& name : data.column_names)
    h = fnv1a_bytes(h, name.data(), name.size());
  return h;
}

}  // namespace pimfit
