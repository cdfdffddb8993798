// Subset, shuffle, and permutation combinatorics used to index weight
// functions, tensor components, and triangularity statements.
#pragma once

#include <cstdint>
#include <vector>

namespace ellqg {

// A subset of {1, ..., n}, kept as a strictly increasing member list.
struct SubsetIndex {
  int n = 0;
  std::vector<int> members;

  SubsetIndex() = default;
  SubsetIndex(int ambient, std::vector<int> mem);  // validates on construction

  int k() const { return static_cast<int>(members.size()); }
  bool contains(int j) const;
};

bool operator==(const SubsetIndex& a, const SubsetIndex& b);

// Members of {1..n} \ I, increasing.
SubsetIndex complement(const SubsetIndex& I);

// All k-element subsets of {1..n} in lexicographic member order.
std::vector<SubsetIndex> subsets_of_size(int n, int k);

// n(j,I): number of members of I strictly greater than j. Requires 1<=j<=n.
int count_above(int j, const SubsetIndex& I);

// w(j,I) = n(j,I) - n(j, complement(I)).
int weight_index(int j, const SubsetIndex& I);

// 1 if a > b, 0 if a < b; a == b is rejected.
int epsilon(int a, int b);

// Componentwise order on equal-size subsets: i_1<=j_1, ..., i_k<=j_k.
bool subset_leq(const SubsetIndex& I, const SubsetIndex& J);

// Bitmask with bit (a-1) set for each member a; inverse below.
std::uint32_t subset_to_mask(const SubsetIndex& I);
SubsetIndex mask_to_subset(std::uint32_t mask, int n);

// Permutations sigma of {0..k'+k''-1} that are increasing on the first k'
// slots and on the last k'' slots; there are binomial(k'+k'', k') of them.
struct ShuffleEnumeration {
  int k_prime = 0;
  int k_double_prime = 0;
  std::vector<std::vector<int>> items;
};

ShuffleEnumeration enumerate_shuffles(int k_prime, int k_double_prime,
                                      int max_total = 8);

// All permutations of {0..k-1} in lexicographic order.
std::vector<std::vector<int>> all_permutations(int k);

long long binomial(int n, int k);

}  // namespace ellqg
