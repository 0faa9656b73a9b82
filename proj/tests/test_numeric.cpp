#include <gtest/gtest.h>

#include <cmath>
#include <string_view>
#include <vector>

#include "bhsr/numeric.hpp"

using namespace bhsr;

TEST(Numeric, PairwiseSumBeatsNaiveOnSmallTerms) {
    std::vector<double> xs(1 << 20, 0.1);
    xs.insert(xs.begin(), 1e8);
    const double exact = 1e8 + 0.1 * (1 << 20);
    EXPECT_NEAR(pairwise_sum(xs), exact, 1e-6);
}

TEST(Numeric, SampleStatsPlain) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = sample_stats(xs, false);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    // sample variance 5/3, se = sqrt(5/3 / 4)
    EXPECT_NEAR(s.std_error, std::sqrt(5.0 / 12.0), 1e-15);
    EXPECT_EQ(s.n, 4u);
}

TEST(Numeric, SampleStatsAntitheticUsesPairMeans) {
    const std::vector<double> xs{1.0, -1.0, 2.0, -2.0};
    const auto s = sample_stats(xs, true);
    EXPECT_DOUBLE_EQ(s.mean, 0.0);
    EXPECT_DOUBLE_EQ(s.std_error, 0.0);
}

TEST(Numeric, GaussHermiteMoments) {
    for (int n : {5, 10, 20}) {
        const auto q = gauss_hermite(n);
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            const double x = q.nodes[k];
            m0 += q.weights[k];
            m2 += q.weights[k] * x * x;
            m4 += q.weights[k] * x * x * x * x;
        }
        EXPECT_NEAR(m0, 1.0, 1e-13);
        EXPECT_NEAR(m2, 1.0, 1e-12);
        EXPECT_NEAR(m4, 3.0, 1e-11);
    }
}

TEST(Numeric, KsStatistic) {
    EXPECT_DOUBLE_EQ(ks_statistic({1, 2, 3}, {1, 2, 3}), 0.0);
    EXPECT_DOUBLE_EQ(ks_statistic({1, 2}, {3, 4}), 1.0);
}

TEST(Numeric, StreamSeedsDiffer) {
    EXPECT_NE(stream_seed(42, 0), stream_seed(42, 1));
    EXPECT_NE(stream_seed(42, 0), stream_seed(43, 0));
    EXPECT_EQ(stream_seed(7, 3), stream_seed(7, 3));
}

TEST(Numeric, Fnv1aReferenceVectors) {
    constexpr std::string_view empty;
    constexpr std::string_view a = "a";
    EXPECT_EQ(fnv1a_hex(empty), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex(a), "af63dc4c8601ec8c");
}

TEST(Numeric, NormalCdf) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
}
