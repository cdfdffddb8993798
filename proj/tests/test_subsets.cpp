// Unit tests for subset / shuffle / permutation combinatorics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "ellqg/subsets.hpp"

using namespace ellqg;

TEST_CASE("count_above matches direct counting") {
  CHECK(count_above(1, SubsetIndex(3, {2})) == 1);
  CHECK(count_above(2, SubsetIndex(3, {2})) == 0);
  CHECK(count_above(3, SubsetIndex(5, {1, 4, 5})) == 2);
  CHECK_THROWS_AS(count_above(0, SubsetIndex(3, {2})), std::out_of_range);
  CHECK_THROWS_AS(count_above(4, SubsetIndex(3, {2})), std::out_of_range);
}

TEST_CASE("weight_index values and antisymmetry") {
  CHECK(weight_index(2, SubsetIndex(3, {2})) == -1);
  CHECK(weight_index(1, SubsetIndex(1, {1})) == 0);
  CHECK(weight_index(1, SubsetIndex(4, {1, 2})) == -1);

  const int n = 5;
  for (int k = 0; k <= n; ++k)
    for (const SubsetIndex& I : subsets_of_size(n, k)) {
      const SubsetIndex Ic = complement(I);
      for (int j = 1; j <= n; ++j)
        CHECK(weight_index(j, I) + weight_index(j, Ic) == 0);
    }
}

TEST_CASE("epsilon is the order indicator") {
  CHECK(epsilon(3, 1) == 1);
  CHECK(epsilon(1, 3) == 0);
  CHECK(epsilon(2, 1) + epsilon(1, 2) == 1);
  CHECK_THROWS_AS(epsilon(2, 2), std::invalid_argument);
}

TEST_CASE("subset_leq examples and partial-order laws") {
  CHECK(subset_leq(SubsetIndex(4, {1, 2}), SubsetIndex(4, {1, 3})));
  CHECK_FALSE(subset_leq(SubsetIndex(4, {2, 3}), SubsetIndex(4, {1, 4})));
  CHECK_THROWS_AS(subset_leq(SubsetIndex(4, {1}), SubsetIndex(4, {1, 2})),
                  std::invalid_argument);

  const int n = 6;
  for (int k = 0; k <= n; ++k) {
    const auto all = subsets_of_size(n, k);
    for (const auto& I : all) {
      CHECK(subset_leq(I, I));
      for (const auto& J : all) {
        if (subset_leq(I, J) && subset_leq(J, I)) CHECK(I == J);
        for (const auto& K : all)
          if (subset_leq(I, J) && subset_leq(J, K)) CHECK(subset_leq(I, K));
      }
    }
  }
}

TEST_CASE("subset enumeration is lexicographic and complete") {
  const auto s = subsets_of_size(4, 2);
  REQUIRE(s.size() == 6);
  CHECK(s[0].members == std::vector<int>{1, 2});
  CHECK(s[1].members == std::vector<int>{1, 3});
  CHECK(s[5].members == std::vector<int>{3, 4});
  CHECK(subsets_of_size(5, 0).size() == 1);
  for (int n = 0; n <= 8; ++n)
    for (int k = 0; k <= n; ++k)
      CHECK(static_cast<long long>(subsets_of_size(n, k).size()) ==
            binomial(n, k));
}

TEST_CASE("mask round trip") {
  for (const SubsetIndex& I : subsets_of_size(6, 3)) {
    const SubsetIndex back = mask_to_subset(subset_to_mask(I), 6);
    CHECK(back == I);
  }
  CHECK(subset_to_mask(SubsetIndex(4, {1, 4})) == 0b1001u);
  CHECK_THROWS_AS(mask_to_subset(0b100u, 2), std::invalid_argument);
}

TEST_CASE("shuffles: counts, validity, block monotonicity") {
  CHECK(enumerate_shuffles(1, 1).items.size() == 2);
  CHECK(enumerate_shuffles(2, 1).items.size() == 3);
  CHECK(enumerate_shuffles(0, 5).items.size() == 1);
  CHECK(enumerate_shuffles(4, 0).items.size() == 1);

  for (int a = 0; a <= 8; ++a)
    for (int b = 0; a + b <= 8; ++b) {
      const auto e = enumerate_shuffles(a, b);
      CHECK(static_cast<long long>(e.items.size()) == binomial(a + b, a));
      std::set<std::vector<int>> seen;
      for (const auto& sigma : e.items) {
        REQUIRE(static_cast<int>(sigma.size()) == a + b);
        std::vector<int> sorted = sigma;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < a + b; ++i) CHECK(sorted[i] == i);  // permutation
        for (int i = 1; i < a; ++i) CHECK(sigma[i - 1] < sigma[i]);
        for (int i = a + 1; i < a + b; ++i) CHECK(sigma[i - 1] < sigma[i]);
        seen.insert(sigma);
      }
      CHECK(seen.size() == e.items.size());  // no duplicates
    }

  CHECK_THROWS_AS(enumerate_shuffles(5, 4), std::invalid_argument);
  CHECK(enumerate_shuffles(5, 4, 9).items.size() == 126);
}

TEST_CASE("permutation enumeration") {
  CHECK(all_permutations(0).size() == 1);
  CHECK(all_permutations(1).size() == 1);
  CHECK(all_permutations(4).size() == 24);
  const auto p3 = all_permutations(3);
  CHECK(p3.front() == std::vector<int>{0, 1, 2});
  CHECK(p3.back() == std::vector<int>{2, 1, 0});
}

TEST_CASE("construction validates members") {
  CHECK_THROWS_AS(SubsetIndex(3, {2, 2}), std::invalid_argument);
  CHECK_THROWS_AS(SubsetIndex(3, {3, 2}), std::invalid_argument);
  CHECK_THROWS_AS(SubsetIndex(3, {4}), std::invalid_argument);
  CHECK_THROWS_AS(SubsetIndex(17, {1}), std::invalid_argument);
  CHECK(complement(SubsetIndex(5, {2, 4})).members == std::vector<int>{1, 3, 5});
}
