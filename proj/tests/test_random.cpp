#include <cmath>
#include <cstdlib>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "mvmd/parallel.hpp"
#include "mvmd/random.hpp"
#include "support/oracles.hpp"

using mvmd::Philox4x32;
using mvmd::RandomStream;

TEST(Philox, KnownAnswers) {
    const auto zero = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(zero, (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    const auto ones = Philox4x32::apply({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
    EXPECT_EQ(ones, (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    const auto pi = Philox4x32::apply({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
    EXPECT_EQ(pi, (Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RandomStream, SameSeedAndStreamRepeat) {
    RandomStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        EXPECT_NE(x, c.normal());
        EXPECT_NE(x, d.normal());
    }
}

TEST(RandomStream, UniformsInOpenInterval) {
    RandomStream r(1, 0);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(RandomStream, NormalsPassKs) {
    std::vector<double> xs;
    for (std::uint64_t p = 0; p < 20000; ++p) {
        RandomStream r(11, p);
        xs.push_back(r.normal());
        xs.push_back(r.normal());
    }
    EXPECT_GT(oracle::ks_one_sample(xs, oracle::phi).p_value, 0.01);
}

TEST(Parallel, PartitionIsIndependentOfWorkers) {
    for (unsigned w : {1u, 2u, 3u, 7u}) {
        std::vector<int> hits(1001, 0);
        mvmd::parallel_for(hits.size(), w, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) ++hits[i];
        });
        EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; })) << w;
    }
}

TEST(Parallel, ExceptionsPropagate) {
    EXPECT_THROW(mvmd::parallel_for(10, 2, [](std::size_t b, std::size_t) {
                     if (b == 0) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}

TEST(Parallel, PairwiseSumIsAccurate) {
    std::vector<double> xs(1'000'000, 0.1);
    EXPECT_NEAR(mvmd::pairwise_sum(xs), 100000.0, 1e-8);
    EXPECT_EQ(mvmd::pairwise_sum(std::span<const double>{}), 0.0);
}

TEST(Parallel, WorkerCountFromEnvironment) {
    ::setenv(mvmd::kWorkersEnv, "3", 1);
    EXPECT_EQ(mvmd::default_workers(), 3u);
    ::unsetenv(mvmd::kWorkersEnv);
    EXPECT_GE(mvmd::default_workers(), 1u);
}
