#include <gtest/gtest.h>

#include "metric_checks.hpp"

// Library metrics against brute-force oracles on random small instances.
TEST(MetricOracles, AgreeOnRandomInstances) {
  for (unsigned seed : {1u, 99u, 2024u}) {
    const auto report = checks::run_oracle_checks(seed, 150);
    ASSERT_EQ(report.size(), 12u);
    for (const auto& [name, tally] : report) {
      EXPECT_GE(tally.instances, 100) << name;
      EXPECT_LE(tally.max_error, 1e-9) << name << " seed " << seed;
      EXPECT_EQ(tally.mismatched_errors, 0) << name << " seed " << seed;
    }
  }
}
