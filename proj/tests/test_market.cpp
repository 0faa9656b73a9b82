#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "bhsr/errors.hpp"
#include "bhsr/market.hpp"
#include "bhsr/numeric.hpp"
#include "bhsr/parallel.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bhsr;

TEST(ClosedForms, AgreeWithReference) {
    for (double k : {60.0, 100.0, 140.0})
        for (double sig : {0.1, 0.2, 0.5}) {
            EXPECT_NEAR(lognormal_call(100.0, k, sig, 1.5), oracle::bs_call(100.0, k, sig, 1.5), 1e-12);
            EXPECT_NEAR(lognormal_digital(100.0, k, sig, 1.5), oracle::bs_digital(100.0, k, sig, 1.5), 1e-14);
            EXPECT_NEAR(lognormal_call_delta(100.0, k, sig, 1.5), oracle::bs_call_delta(100.0, k, sig, 1.5), 1e-14);
        }
    EXPECT_NEAR(lognormal_call(100.0, 100.0, 0.2, 1.0), 7.965567455405804, 1e-12);
}

TEST(Model, ValidationRejectsBadInputs) {
    auto m = fixture::digital_example(100.0).model;
    m.s0[1] = -1.0;
    EXPECT_THROW(validate_model(m), ValidationError);
    m = fixture::digital_example(100.0).model;
    m.block_certificate = false;
    EXPECT_THROW(validate_model(m), ValidationError);
    m = fixture::digital_example(100.0).model;
    m.sigma(1, 1) = 0.0;
    EXPECT_THROW(check_conditioning(m, 1e8), ValidationError);
}

TEST(Simulate, TerminalMomentsMatchLognormal) {
    auto m = fixture::digital_example(100.0).model;
    m.sigma(1, 0) = 0.15;  // correlated costly row
    const auto b = simulate(m, 100000, 4, 9);
    std::vector<double> s(b.n_paths), l0(b.n_paths), l1(b.n_paths), cross(b.n_paths);
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        const auto t = b.terminal_at(p);
        s[p] = t[0];
        l0[p] = std::log(t[0] / 100.0) + 0.5 * 0.04;
        l1[p] = std::log(t[1] / 100.0) + 0.5 * (0.09 + 0.0225);
        cross[p] = l0[p] * l1[p];
    }
    const auto st = sample_stats(s, true);
    EXPECT_NEAR(st.mean, 100.0, 4.0 * st.std_error + 1e-12);
    double v0 = 0;
    for (double x : l0) v0 += x * x;
    EXPECT_NEAR(v0 / b.n_paths, 0.04, 0.002);
    // Cov(log S0, log S1) = 0.2 * 0.15.
    EXPECT_NEAR(mean(cross), 0.03, 0.002);
}

TEST(Simulate, AntitheticPairsMirrorLogReturns) {
    const auto m = fixture::digital_example(100.0).model;
    const auto b = simulate(m, 64, 8, 1);
    for (std::size_t p = 0; p < b.n_paths; p += 2) {
        const double a = std::log(b.terminal_at(p)[0] / 100.0) + 0.02;
        const double c = std::log(b.terminal_at(p + 1)[0] / 100.0) + 0.02;
        EXPECT_NEAR(a + c, 0.0, 1e-12);
    }
}

TEST(Simulate, IndependentOfThreadCountAndRecording) {
    const auto m = fixture::digital_example(10.0).model;
    set_max_threads(1);
    const auto a = simulate(m, 5000, 16, 42);
    set_max_threads(4);
    SimulateOptions o;
    o.n_recorded = 100;
    const auto b = simulate(m, 5000, 16, 42, o);
    set_max_threads(0);
    EXPECT_EQ(a.terminal, b.terminal);
    for (std::size_t p = 0; p < b.n_recorded; ++p) {
        const auto last = b.state(p, b.n_steps);
        EXPECT_EQ(last[0], b.terminal_at(p)[0]);
        EXPECT_DOUBLE_EQ(b.state(p, 0)[1], 10.0);
    }
}

TEST(Simulate, EulerSchemeHasTheSameLaw) {
    const auto m = fixture::digital_example(100.0).model;
    const auto a = simulate(m, 20000, 32, 5);
    SimulateOptions o;
    o.force_euler = true;
    const auto b = simulate(m, 20000, 32, 6, o);
    EXPECT_EQ(b.scheme, Scheme::log_euler);
    std::vector<double> xa, xb;
    for (std::size_t p = 0; p < a.n_paths; ++p) {
        xa.push_back(a.terminal_at(p)[0]);
        xb.push_back(b.terminal_at(p)[0]);
    }
    EXPECT_LT(ks_statistic(xa, xb), 0.02);
}

TEST(Simulate, StateDependentVolatility) {
    auto m = fixture::digital_example(100.0).model;
    m.vol_fn = [](double, std::span<const double> s, Eigen::MatrixXd& out) {
        out = Eigen::MatrixXd::Zero(2, 2);
        out(0, 0) = 0.2 * std::sqrt(100.0 / s[0]);
        out(1, 1) = 0.3;
    };
    const auto b = simulate(m, 20000, 64, 3);
    EXPECT_EQ(b.scheme, Scheme::log_euler);
    std::vector<double> s;
    for (std::size_t p = 0; p < b.n_paths; ++p) s.push_back(b.terminal_at(p)[0]);
    const auto st = sample_stats(s, true);
    EXPECT_NEAR(st.mean, 100.0, 4.0 * st.std_error);
}

TEST(PathIo, RoundTrip) {
    const auto m = fixture::digital_example(10.0).model;
    SimulateOptions o;
    o.n_recorded = 7;
    const auto b = simulate(m, 50, 5, 2, o);
    const auto prefix = std::filesystem::temp_directory_path() / "bhsr_paths_roundtrip";
    save_batch(b, prefix);
    const auto c = load_batch(prefix);
    EXPECT_EQ(c.terminal, b.terminal);
    EXPECT_EQ(c.paths, b.paths);
    EXPECT_EQ(c.times, b.times);
    EXPECT_EQ(c.seed, b.seed);
    EXPECT_EQ(c.scheme, b.scheme);
}
