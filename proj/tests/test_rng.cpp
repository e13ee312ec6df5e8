#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pimfit/rng.hpp"

using namespace pimfit;

TEST_CASE("same seed reproduces the stream, different seeds diverge") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  REQUIRE(all_equal);
  REQUIRE(any_diff);
}

TEST_CASE("split streams are reproducible and independent of parent use") {
  Rng parent(7);
  Rng child1 = parent.split(3, 9);
  parent.next_u64();
  Rng child2 = parent.split(3, 9);
  REQUIRE(child1.next_u64() == child2.next_u64());
  Rng other = parent.split(3, 10);
  REQUIRE(child2.next_u64() != other.next_u64());
}

TEST_CASE("permutation is a permutation") {
  Rng rng(5);
  const auto perm = rng.permutation(101);
  std::set<std::size_t> seen(perm.begin(), perm.end());
  REQUIRE(seen.size() == 101);
  REQUIRE(*seen.begin() == 0);
  REQUIRE(*seen.rbegin() == 100);
}

TEST_CASE("sample without replacement has distinct in-range entries") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const auto draw = rng.sample_without_replacement(50, 12);
    REQUIRE(draw.size() == 12);
    std::set<std::size_t> seen(draw.begin(), draw.end());
    REQUIRE(seen.size() == 12);
    REQUIRE(*seen.rbegin() < 50);
  }
}

TEST_CASE("uniform_int covers its range uniformly enough") {
  Rng rng(13);
  std::vector<int> counts(8, 0);
  const int draws = 80000;
  for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(rng.uniform_int(0, 7))]++;
  for (int c : counts) {
    REQUIRE(c > draws / 8 - 600);
    REQUIRE(c < draws / 8 + 600);
  }
}

TEST_CASE("normal draws have the requested moments") {
  Rng rng(17);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal(2.0, 3.0);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(mean - 2.0) < 0.03);
  REQUIRE(std::abs(var - 9.0) < 0.15);
}
