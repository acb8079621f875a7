#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "hetbai/error.hpp"
#include "hetbai/instance.hpp"
#include "hetbai/instance_io.hpp"
#include "hetbai/rng.hpp"
#include "oracles.hpp"

using namespace hetbai;

namespace {

ProblemInstance make(int k, std::vector<std::vector<int>> sets,
                     std::vector<std::vector<double>> means) {
  return ProblemInstance{k, std::move(sets), std::move(means)};
}

const std::filesystem::path kFixtures = HETBAI_FIXTURE_DIR;

}  // namespace

TEST_CASE("validate") {
  SUBCASE("distinct means are admissible") {
    const auto r = validate(make(2, {{0, 1}}, {{1.0, 0.0}}));
    CHECK(r.structurally_valid);
    CHECK(r.admissible);
    CHECK(r.violations.empty());
  }
  SUBCASE("exact tie is reported") {
    const auto r = validate(make(2, {{0, 1}}, {{1.0, 1.0}}));
    CHECK(r.structurally_valid);
    CHECK_FALSE(r.admissible);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0] == "tied best arm at client 1");
  }
  SUBCASE("single-arm client is structurally invalid") {
    const auto r = validate(make(2, {{0}}, {{1.0}}));
    CHECK_FALSE(r.structurally_valid);
    CHECK_FALSE(r.admissible);
    CHECK(std::find(r.violations.begin(), r.violations.end(), "|S_1| < 2") !=
          r.violations.end());
  }
  SUBCASE("uncovered arm and out-of-range arm") {
    CHECK_FALSE(validate(make(3, {{0, 1}}, {{1.0, 0.0}})).structurally_valid);
    CHECK_FALSE(validate(make(2, {{0, 2}}, {{1.0, 0.0}})).structurally_valid);
  }
  SUBCASE("means shape must match the arm sets") {
    CHECK_FALSE(validate(make(2, {{0, 1}}, {{1.0}})).structurally_valid);
  }
}

TEST_CASE("arm_stats") {
  SUBCASE("single client, descending means") {
    const auto s = arm_stats(make(3, {{0, 1, 2}}, {{3.0, 2.0, 1.0}}));
    CHECK(s.gaps == std::vector<double>{1.0, 1.0, 2.0});
    CHECK(s.best_arms == std::vector<int>{0});
    CHECK(s.multiplicities == std::vector<int>{1, 1, 1});
  }
  SUBCASE("symmetric two-client instance") {
    const auto s = arm_stats(make(2, {{0, 1}, {0, 1}}, {{1.0, 0.0}, {1.0, 0.0}}));
    CHECK(s.global_means == std::vector<double>{1.0, 0.0});
    CHECK(s.multiplicities == std::vector<int>{2, 2});
    CHECK(s.gaps == std::vector<double>{1.0, 1.0});
    CHECK(s.best_arms == std::vector<int>{0, 0});
  }
  SUBCASE("hardness family at rho = 4") {
    const auto s = arm_stats(gen_hardness_instance(4.0, 2, {{0, 1}}));
    CHECK(s.global_means[0] == doctest::Approx(0.5));
    CHECK(s.global_means[1] == doctest::Approx(1.0));
    CHECK(s.gaps[0] == doctest::Approx(0.5));
    CHECK(s.gaps[1] == doctest::Approx(0.5));
    CHECK(s.best_arms == std::vector<int>{1});
  }
  SUBCASE("global means average over owners") {
    const auto s = arm_stats(make(3, {{0, 1}, {1, 2}}, {{1.0, 0.4}, {0.6, 0.0}}));
    CHECK(s.global_means[1] == doctest::Approx(0.5));
    CHECK(s.multiplicities == std::vector<int>{1, 2, 1});
    CHECK(s.gaps[1] == doctest::Approx(0.5));
  }
  SUBCASE("structurally invalid input throws") {
    CHECK_THROWS_AS(arm_stats(make(2, {{0}}, {{1.0}})), Error);
  }
}

TEST_CASE("confusion_pairs") {
  SUBCASE("single client") {
    const auto v = make(3, {{0, 1, 2}}, {{3.0, 2.0, 1.0}});
    const auto p = confusion_pairs(v, arm_stats(v));
    CHECK(p.pairs == std::vector<ArmPair>{{0, 1}, {0, 2}});
  }
  SUBCASE("duplicates across clients collapse") {
    const auto v = make(2, {{0, 1}, {0, 1}}, {{1.0, 0.0}, {1.0, 0.0}});
    CHECK(confusion_pairs(v, arm_stats(v)).pairs == std::vector<ArmPair>{{0, 1}});
  }
  SUBCASE("overlap pattern 1 matches direct enumeration") {
    const auto v = gen_overlap_instance(1, 5);
    const auto mu = oracle::global_means(v);
    std::set<ArmPair> expected;
    for (const auto& s : v.arm_sets) {
      const int star = *std::max_element(s.begin(), s.end(),
                                         [&](int a, int b) { return mu[a] < mu[b]; });
      for (int i : s) {
        if (i != star) expected.insert({star, i});
      }
    }
    const auto p = confusion_pairs(v, arm_stats(v));
    CHECK(std::set<ArmPair>(p.pairs.begin(), p.pairs.end()) == expected);
    CHECK(p.pairs.size() == expected.size());
  }
  SUBCASE("inadmissible instance throws") {
    const auto v = make(2, {{0, 1}}, {{1.0, 1.0}});
    CHECK_THROWS_AS(confusion_pairs(v, arm_stats(v)), Error);
  }
}

TEST_CASE("partition_arms") {
  SUBCASE("disjoint sets") {
    const auto p = partition_arms(make(4, {{0, 1}, {2, 3}}, {{1, 0}, {1, 0}}));
    REQUIRE(p.num_classes() == 2);
    CHECK(p.classes[0] == std::vector<int>{0, 1});
    CHECK(p.classes[1] == std::vector<int>{2, 3});
    CHECK(p.class_of == std::vector<int>{0, 0, 1, 1});
  }
  SUBCASE("chained overlap") {
    const auto p = partition_arms(make(3, {{0, 1}, {1, 2}}, {{1, 0}, {1, 0}}));
    REQUIRE(p.num_classes() == 1);
    CHECK(p.classes[0] == std::vector<int>{0, 1, 2});
  }
  SUBCASE("cyclic triples connect every arm") {
    const auto p = partition_arms(gen_overlap_instance(2, 1));
    REQUIRE(p.num_classes() == 1);
    CHECK(p.classes[0] == std::vector<int>{0, 1, 2, 3, 4});
  }
  SUBCASE("classes are ordered by smallest member") {
    const auto p = partition_arms(make(4, {{1, 3}, {0, 2}}, {{1, 0}, {1, 0}}));
    REQUIRE(p.num_classes() == 2);
    CHECK(p.classes[0] == std::vector<int>{0, 2});
    CHECK(p.classes[1] == std::vector<int>{1, 3});
  }
}

TEST_CASE("partition is the finest containing every arm set") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = oracle::random_instance(rng, 6, 4);
    const auto p = partition_arms(v);
    std::vector<int> seen(v.num_arms, 0);
    for (int j = 0; j < p.num_classes(); ++j) {
      for (int arm : p.classes[j]) {
        ++seen[arm];
        CHECK(p.class_of[arm] == j);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    for (const auto& s : v.arm_sets) {
      for (int arm : s) CHECK(p.class_of[arm] == p.class_of[s.front()]);
    }
    // Each class is connected through shared sets, so no coarser split exists.
    for (const auto& cls : p.classes) {
      std::set<int> reached{cls.front()};
      bool grew = true;
      while (grew) {
        grew = false;
        for (const auto& s : v.arm_sets) {
          const bool touches = std::any_of(s.begin(), s.end(),
                                           [&](int a) { return reached.count(a) > 0; });
          if (!touches) continue;
          for (int a : s) grew = reached.insert(a).second || grew;
        }
      }
      CHECK(reached == std::set<int>(cls.begin(), cls.end()));
    }
    for (const auto& [a, b] : confusion_pairs(v, arm_stats(v)).pairs) {
      CHECK(p.class_of[a] == p.class_of[b]);
    }
  }
}

TEST_CASE("admissible instances have positive gaps and unique best arms") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = oracle::random_instance(rng, 5, 4);
    const auto s = arm_stats(v);
    REQUIRE(admissible(s));
    for (double g : s.gaps) CHECK(g > 0.0);
    for (int m = 0; m < v.num_clients(); ++m) {
      const int star = s.best_arms[m];
      for (int i : v.arm_sets[m]) {
        if (i != star) CHECK(s.global_means[star] > s.global_means[i]);
      }
    }
    CHECK(s.gaps == oracle::gaps(v));
  }
}

TEST_CASE("gen_overlap_instance") {
  SUBCASE("pattern 1 arm sets") {
    const auto v = gen_overlap_instance(1, 0);
    CHECK(v.num_arms == 5);
    CHECK(v.arm_sets ==
          std::vector<std::vector<int>>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  }
  SUBCASE("pattern 4 gives full access") {
    for (const auto& s : gen_overlap_instance(4, 0).arm_sets) {
      CHECK(s == std::vector<int>{0, 1, 2, 3, 4});
    }
  }
  SUBCASE("means lie in their intervals and the smallest arm wins") {
    for (int p = 1; p <= 4; ++p) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto v = gen_overlap_instance(p, seed);
        for (int m = 0; m < 5; ++m) {
          for (std::size_t k = 0; k < v.arm_sets[m].size(); ++k) {
            const int i = v.arm_sets[m][k] + 1;
            CHECK(v.means[m][k] >= 7.0 - i);
            CHECK(v.means[m][k] <= 8.0 - i);
          }
        }
        const auto s = arm_stats(v);
        for (int m = 0; m < 5; ++m) CHECK(s.best_arms[m] == v.arm_sets[m].front());
        CHECK(validate(v).admissible);
      }
    }
  }
  SUBCASE("deterministic per seed") {
    CHECK(gen_overlap_instance(3, 9) == gen_overlap_instance(3, 9));
    CHECK_FALSE(gen_overlap_instance(3, 9) == gen_overlap_instance(3, 10));
  }
  SUBCASE("pattern out of range") {
    CHECK_THROWS_AS(gen_overlap_instance(0, 0), Error);
    CHECK_THROWS_AS(gen_overlap_instance(5, 0), Error);
  }
}

TEST_CASE("gen_hardness_instance") {
  SUBCASE("rho = 1") {
    const auto v = gen_hardness_instance(1.0, 3, {{0, 1, 2}, {0, 1, 2}});
    for (const auto& row : v.means) CHECK(row == std::vector<double>{1.0, 2.0, 3.0});
  }
  SUBCASE("rho = 100") {
    const auto v = gen_hardness_instance(100.0, 2, {{0, 1}});
    CHECK(v.means[0][0] == doctest::Approx(0.1));
    CHECK(v.means[0][1] == doctest::Approx(0.2));
  }
  SUBCASE("rho = 4 minimum gap") {
    const auto s = arm_stats(gen_hardness_instance(4.0, 3, {{0, 1}, {1, 2}}));
    CHECK(*std::min_element(s.gaps.begin(), s.gaps.end()) == doctest::Approx(0.5));
  }
  SUBCASE("scaling rho by c^2 divides means and gaps by c") {
    const std::vector<std::vector<int>> sets{{0, 1}, {1, 2}, {0, 2}};
    for (double rho : {0.3, 1.0, 7.0}) {
      for (double c : {0.5, 2.0, 13.0}) {
        const auto a = gen_hardness_instance(rho, 3, sets);
        const auto b = gen_hardness_instance(rho * c * c, 3, sets);
        for (std::size_t m = 0; m < sets.size(); ++m) {
          for (std::size_t k = 0; k < sets[m].size(); ++k) {
            CHECK(b.means[m][k] == doctest::Approx(a.means[m][k] / c).epsilon(1e-12));
          }
        }
        const auto ga = arm_stats(a).gaps, gb = arm_stats(b).gaps;
        for (int i = 0; i < 3; ++i) CHECK(gb[i] == doctest::Approx(ga[i] / c).epsilon(1e-12));
      }
    }
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(gen_hardness_instance(0.0, 2, {{0, 1}}), Error);
    CHECK_THROWS_AS(gen_hardness_instance(1.0, 2, {{0}}), Error);
  }
}

TEST_CASE("instance JSON") {
  SUBCASE("round trip is exact") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const auto v = oracle::random_instance(rng, 6, 4);
      CHECK(instance_from_json(instance_to_json(v)) == v);
      CHECK(instance_from_json(instance_to_json(v, -1)) == v);
    }
  }
  SUBCASE("fixture files load with 1-based indices mapped to 0-based") {
    const auto v = load_instance(kFixtures / "chain3.json");
    CHECK(v.num_arms == 3);
    CHECK(v.arm_sets == std::vector<std::vector<int>>{{0, 1}, {1, 2}});
    CHECK(v.mean(1, 1).value() == 0.6);
    CHECK_FALSE(v.mean(0, 2).has_value());
  }
  SUBCASE("schema violations are rejected") {
    CHECK_THROWS_AS(instance_from_json(R"({"K":2,"M":1,"arm_sets":[[1,2]],"means":[]})"), Error);
    CHECK_THROWS_AS(instance_from_json(
                        R"({"K":2,"M":1,"arm_sets":[[1,2]],"extra":1,
                            "means":[{"client":1,"arm":1,"mu":1},{"client":1,"arm":2,"mu":0}]})"),
                    Error);
    CHECK_THROWS_AS(instance_from_json(
                        R"({"K":2,"M":1,"arm_sets":[[1,2]],
                            "means":[{"client":1,"arm":1,"mu":1},{"client":1,"arm":1,"mu":0}]})"),
                    Error);
    CHECK_THROWS_AS(instance_from_json(
                        R"({"K":2,"M":1,"arm_sets":[[1,3]],
                            "means":[{"client":1,"arm":1,"mu":1},{"client":1,"arm":3,"mu":0}]})"),
                    Error);
    CHECK_THROWS_AS(instance_from_json("not json"), Error);
    CHECK_THROWS_AS(load_instance(kFixtures / "missing.json"), Error);
  }
  SUBCASE("single-arm client parses and is then flagged by validate") {
    const auto v = load_instance(kFixtures / "single_arm_client.json");
    CHECK_FALSE(validate(v).structurally_valid);
  }
}
