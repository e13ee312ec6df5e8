#pragma once

#include <Eigen/Core>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "pimfit/aggregate.hpp"
#include "pimfit/dataset.hpp"
#include "pimfit/design.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/fit.hpp"
#include "pimfit/pool.hpp"
#include "pimfit/rng.hpp"

namespace pimfit {

// Disjoint split of n rows after a seeded Fisher-Yates permutation. All
// pieces share one size except possibly the last.
struct PartitionPlan {
  Eigen::Index n = 0;
  std::size_t s_count = 0;
  Eigen::Index partition_size = 0;
  std::uint64_t permutation_seed = 0;

  // floor(n/S) rows per piece, remainder absorbed by the last piece.
  static PartitionPlan by_count(Eigen::Index n, std::size_t s,
                                std::uint64_t seed) {
    if (s < 2) throw ConfigError("partition count must be at least 2");
    if (static_cast<Eigen::Index>(s) > n)
      throw ConfigError("more partitions than rows");
    PartitionPlan plan;
    plan.n = n;
    plan.s_count = s;
    plan.partition_size = n / static_cast<Eigen::Index>(s);
    plan.permutation_seed = seed;
    return plan;
  }

  // Pieces of a fixed size; the last piece keeps the (smaller) remainder, as
  // when slicing a large survey into thousand-row chunks.
  static PartitionPlan by_piece_size(Eigen::Index n, Eigen::Index size,
                                     std::uint64_t seed) {
    if (size < 2) throw ConfigError("partition size must be at least 2");
    if (size >= n) throw ConfigError("partition size must be smaller than n");
    PartitionPlan plan;
    plan.n = n;
    plan.partition_size = size;
    plan.s_count = static_cast<std::size_t>((n + size - 1) / size);
    plan.permutation_seed = seed;
    return plan;
  }

  std::vector<Eigen::Index> piece_sizes() const {
    std::vector<Eigen::Index> sizes(s_count, partition_size);
    const Eigen::Index assigned =
        partition_size * static_cast<Eigen::Index>(s_count - 1);
    sizes.back() = n - assigned;
    return sizes;
  }

  // Row indices per piece. Pieces are disjoint and cover every row.
  std::vector<std::vector<std::size_t>> realize() const {
    Rng rng(permutation_seed);
    const std::vector<std::size_t> perm = rng.permutation(static_cast<std::size_t>(n));
    std::vector<std::vector<std::size_t>> pieces;
    pieces.reserve(s_count);
    std::size_t offset = 0;
    for (Eigen::Index size : piece_sizes()) {
      pieces.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                          perm.begin() + static_cast<std::ptrdiff_t>(offset) +
                              static_cast<std::ptrdiff_t>(size));
      offset += static_cast<std::size_t>(size);
    }
    return pieces;
  }
};

// Uniform subsampling: B draws of K rows, without replacement within a draw,
// probabilities fixed at 1/n.
struct SubsamplePlan {
  std::size_t k = 0;
  std::size_t b = 0;
  std::uint64_t seed = 0;
  // Lifts the K <= n/2 guard; only sensible in tests, where K = n checks that
  // exhaustive draws reproduce the full-data fit.
  bool allow_degenerate_k = false;

  void validate(Eigen::Index n) const {
    if (k < 2) throw ConfigError("subsample size K must be at least 2");
    if (b < 2) throw ConfigError("B >= 2 iterations are required for variance estimation");
    if (static_cast<Eigen::Index>(k) > n)
      throw ConfigError("subsample size K exceeds n");
    if (!allow_degenerate_k && static_cast<double>(k) > static_cast<double>(n) / 2.0)
      throw ConfigError("subsample size K must satisfy K <= n/2");
  }
};

namespace detail {

template <typename MakeRows>
AggregatedFit fit_pieces(const Dataset& data, const DesignSpec& spec,
                         std::size_t pieces, Method method, double alpha,
                         const SolverConfig& solver, int workers,
                         const char* piece_word, MakeRows&& make_rows) {
  std::vector<PimFit> fits(pieces);
  std::vector<double> seconds(pieces, 0.0);
  parallel_for(pieces, workers, [&](std::size_t s) {
    const Dataset piece = data.subset(make_rows(s));
    const auto started = std::chrono::steady_clock::now();
    try {
      fits[s] = fit_pim(piece, spec, solver);
    } catch (const std::exception& e) {
      // No silent dropping: a lost piece would bias the pooled mean.
      throw AggregationError(std::string(piece_word) + " " + std::to_string(s) +
                                 " failed: " + e.what(),
                             s);
    }
    seconds[s] = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                               started)
                     .count();
  });
  AggregatedFit out = aggregate_only(std::move(fits), method, data.n(), alpha);
  out.piece_seconds = std::move(seconds);
  return out;
}

}  // namespace detail

inline AggregatedFit partition_fit(const Dataset& data, const DesignSpec& spec,
                                   const PartitionPlan& plan, double alpha,
                                   const SolverConfig& solver = {},
                                   int workers = 1) {
  data.validate();
  spec.validate();
  if (plan.n != data.n())
    throw ConfigError("partition plan was built for a different row count");
  const auto sizes = plan.piece_sizes();
  for (Eigen::Index size : sizes) {
    if (size < spec.p() + 2)
      throw ConfigError("partition size " + std::to_string(size) +
                        " is too small for p = " + std::to_string(spec.p()));
  }
  const auto pieces = plan.realize();
  return detail::fit_pieces(
      data, spec, pieces.size(), Method::partition(pieces.size()), alpha, solver,
      workers, "partition", [&](std::size_t s) { return pieces[s]; });
}

inline AggregatedFit subsample_fit(const Dataset& data, const DesignSpec& spec,
                                   const SubsamplePlan& plan, double alpha,
                                   const SolverConfig& solver = {},
                                   int workers = 1) {
  data.validate();
  spec.validate();
  plan.validate(data.n());
  if (static_cast<Eigen::Index>(plan.k) < spec.p() + 2)
    throw ConfigError("subsample size K = " + std::to_string(plan.k) +
                      " is too small for p = " + std::to_string(spec.p()));
  const Rng base(plan.seed);
  const auto n = static_cast<std::size_t>(data.n());
  return detail::fit_pieces(
      data, spec, plan.b, Method::subsample(plan.k, plan.b), alpha, solver,
      workers, "subsample iteration", [&, n](std::size_t b) {
        Rng draw = base.split(b);
        return draw.sample_without_replacement(n, plan.k);
      });
}

}  // namespace pimfit
