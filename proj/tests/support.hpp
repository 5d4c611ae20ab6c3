#pragma once

#include <gtest/gtest.h>

#include "oracles.hpp"


#define EXPECT_MAT_NEAR(a, b, tol)                                                     \
  do {                                                                                 \
    const ::ykmpc::Mat a_ = (a), b_ = (b);                                             \
    ASSERT_EQ(a_.rows(), b_.rows());                                                   \
    ASSERT_EQ(a_.cols(), b_.cols());                                                   \
    EXPECT_LE(::ykmpc::testing::max_abs(a_ - b_), (tol)) << "lhs\n" << a_ << "\nrhs\n" << b_; \
  } while (0)
