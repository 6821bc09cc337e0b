#include "bdr/core.hpp"

#include <cstdlib>

namespace bdr {

std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 0 || k > n) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

int combination_index(int n, const std::vector<int>& idx) {
  auto all = combinations(n, static_cast<int>(idx.size()));
  for (size_t i = 0; i < all.size(); ++i)
    if (all[i] == idx) return static_cast<int>(i);
  throw invalid_input("combination_index: not an increasing multi-index");
}

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

int num_threads() {
  if (const char* env = std::getenv("BDR_NUM_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

}  // namespace bdr
