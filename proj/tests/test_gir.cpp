#include <gtest/gtest.h>

#include "gir.hpp"

TEST(JointDistribution, PriorIsInvariant) {
  for (const auto& m : gir::run(100000, 20, 2718)) EXPECT_TRUE(m.pass()) << m.name << " statistic " << m.statistic;
}
