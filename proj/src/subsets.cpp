#include "ellqg/subsets.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ellqg {

SubsetIndex::SubsetIndex(int ambient, std::vector<int> mem)
    : n(ambient), members(std::move(mem)) {
  if (n < 0 || n > 16)
    throw std::invalid_argument("SubsetIndex: n must lie in [0,16]");
  int prev = 0;
  for (int m : members) {
    if (m <= prev || m > n)
      throw std::invalid_argument("SubsetIndex: members must be strictly "
                                  "increasing within [1," + std::to_string(n) + "]");
    prev = m;
  }
}

bool SubsetIndex::contains(int j) const {
  return std::binary_search(members.begin(), members.end(), j);
}

bool operator==(const SubsetIndex& a, const SubsetIndex& b) {
  return a.n == b.n && a.members == b.members;
}

SubsetIndex complement(const SubsetIndex& I) {
  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(I.n - I.k()));
  for (int j = 1; j <= I.n; ++j)
    if (!I.contains(j)) rest.push_back(j);
  return SubsetIndex(I.n, std::move(rest));
}

std::vector<SubsetIndex> subsets_of_size(int n, int k) {
  if (n < 0 || n > 16) throw std::invalid_argument("subsets_of_size: bad n");
  if (k < 0 || k > n) throw std::invalid_argument("subsets_of_size: bad k");
  std::vector<SubsetIndex> out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  std::iota(cur.begin(), cur.end(), 1);
  while (true) {
    out.emplace_back(n, cur);
    // advance the rightmost member that still has room
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - (k - 1 - i)) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

int count_above(int j, const SubsetIndex& I) {
  if (j < 1 || j > I.n) throw std::out_of_range("count_above: j outside [1,n]");
  int c = 0;
  for (int m : I.members)
    if (m > j) ++c;
  return c;
}

int weight_index(int j, const SubsetIndex& I) {
  return count_above(j, I) - count_above(j, complement(I));
}

int epsilon(int a, int b) {
  if (a == b) throw std::invalid_argument("epsilon: arguments must differ");
  return a > b ? 1 : 0;
}

bool subset_leq(const SubsetIndex& I, const SubsetIndex& J) {
  if (I.n != J.n || I.k() != J.k())
    throw std::invalid_argument("subset_leq: shapes must match");
  for (int i = 0; i < I.k(); ++i)
    if (I.members[static_cast<std::size_t>(i)] >
        J.members[static_cast<std::size_t>(i)])
      return false;
  return true;
}

std::uint32_t subset_to_mask(const SubsetIndex& I) {
  std::uint32_t m = 0;
  for (int j : I.members) m |= (1u << (j - 1));
  return m;
}

SubsetIndex mask_to_subset(std::uint32_t mask, int n) {
  if (n < 0 || n > 16) throw std::invalid_argument("mask_to_subset: bad n");
  if (n < 32 && (mask >> n) != 0)
    throw std::invalid_argument("mask_to_subset: mask has bits beyond n");
  std::vector<int> mem;
  for (int j = 1; j <= n; ++j)
    if (mask & (1u << (j - 1))) mem.push_back(j);
  return SubsetIndex(n, std::move(mem));
}

ShuffleEnumeration enumerate_shuffles(int k_prime, int k_double_prime,
                                      int max_total) {
  if (k_prime < 0 || k_double_prime < 0)
    throw std::invalid_argument("enumerate_shuffles: negative block size");
  const int k = k_prime + k_double_prime;
  if (k > max_total)
    throw std::invalid_argument("enumerate_shuffles: total exceeds cap " +
                                std::to_string(max_total));
  ShuffleEnumeration e;
  e.k_prime = k_prime;
  e.k_double_prime = k_double_prime;

  // Choose which positions of the output word receive the first block; both
  // blocks then fill their positions in increasing order.
  for (const SubsetIndex& S : subsets_of_size(k, k_prime)) {
    std::vector<int> sigma(static_cast<std::size_t>(k));
    std::vector<int> first, second;
    for (int p = 1; p <= k; ++p)
      (S.contains(p) ? first : second).push_back(p - 1);
    for (int i = 0; i < k_prime; ++i)
      sigma[static_cast<std::size_t>(i)] = first[static_cast<std::size_t>(i)];
    for (int i = 0; i < k_double_prime; ++i)
      sigma[static_cast<std::size_t>(k_prime + i)] =
          second[static_cast<std::size_t>(i)];
    e.items.push_back(std::move(sigma));
  }
  return e;
}

std::vector<std::vector<int>> all_permutations(int k) {
  if (k < 0 || k > 10) throw std::invalid_argument("all_permutations: bad k");
  std::vector<int> p(static_cast<std::size_t>(k));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace ellqg
