#include "streamal/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace streamal {

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
  if (k > n) {
    throw std::invalid_argument("cannot sample " + std::to_string(k) +
                                " distinct indices from " + std::to_string(n));
  }
  // Partial Fisher-Yates over an explicit index pool: cost O(n), draws k.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + bounded(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace streamal
