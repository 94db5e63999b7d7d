#pragma once

// Seeded random affine families shared by the solver tests and the
// acceptance run.

#include <random>
#include <set>

#include "npacert/hierarchy.hpp"

namespace fixture {

/// Unit diagonal, random off-diagonal data in [-1, 1], up to three variables
/// on disjoint random supports with [-1, 1] bounds.
inline npacert::AffineMatrixFamily random_family(std::uint64_t seed, int max_dim = 12,
                                                 int max_vars = 3) {
  std::mt19937_64 rng(seed);
  const int n = std::uniform_int_distribution<int>(2, max_dim)(rng);
  std::vector<npacert::Position> cells;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) cells.emplace_back(i, j);
  std::shuffle(cells.begin(), cells.end(), rng);

  const int kv = std::min<int>(std::uniform_int_distribution<int>(1, max_vars)(rng),
                               static_cast<int>(cells.size()));
  std::vector<std::vector<npacert::Position>> supports(static_cast<std::size_t>(kv));
  std::size_t next = 0;
  for (int k = 0; k < kv; ++k) {
    const auto room = cells.size() - next - static_cast<std::size_t>(kv - k - 1);
    const auto size = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(3, room))(rng);
    for (std::size_t s = 0; s < size; ++s) supports[static_cast<std::size_t>(k)].push_back(cells[next++]);
  }

  // Scale the data so both feasible and infeasible instances occur.
  const double scale = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
  std::uniform_real_distribution<double> entry(-scale, scale);
  Eigen::MatrixXd g0 = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t c = next; c < cells.size(); ++c) {
    const auto [i, j] = cells[c];
    g0(i, j) = g0(j, i) = entry(rng);
  }
  return npacert::AffineMatrixFamily(
      g0, supports, std::vector<npacert::Bounds>(static_cast<std::size_t>(kv), npacert::Bounds{}));
}

}  // namespace fixture
