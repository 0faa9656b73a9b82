#pragma once

#include <memory>

#include "bhsr/cone.hpp"
#include "bhsr/market.hpp"
#include "bhsr/payoff.hpp"

namespace fixture {

/// The digital-barrier example: df = dc = 1, vol diag(0.2, 0.3), S^f(0) = 100,
/// K1 = K2 = 100, lambda_12 = 0.1, lambda_21 = 0, T = 1. E1 has S^c(0) = 100,
/// E2 has S^c(0) = 10.
struct Example {
    bhsr::MarketModel model;
    bhsr::PolarSection section;
    bhsr::PayoffSpec payoff;
    bhsr::TransformGridOptions grid_options;
};

Example digital_example(double sc0, int sf_nodes = 801, int sc_nodes = 121);

inline constexpr double kSigmaF = 0.2;
inline constexpr double kStrike = 100.0;
inline constexpr double kBarrier = 100.0;
inline constexpr double kLambda12 = 0.1;

}  // namespace fixture

#include <random>

namespace fixture {

/// A dc = 1 catalog payoff with random kind, strike and costs, on a small grid.
struct RandomCase {
    bhsr::PolarSection section;
    bhsr::PayoffSpec payoff;
    bhsr::TransformGridOptions grid_options;
};

RandomCase random_dc1_case(std::mt19937_64& rng, int sf_nodes = 17, int sc_nodes = 49);

}  // namespace fixture
