#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bhsr/cone.hpp"
#include "bhsr/market.hpp"
#include "bhsr/payoff.hpp"

namespace bhsr {

struct InitialCost {
    double value = 0.0;
    std::vector<double> vertex;
    std::size_t index = 0;
};

/// max over vertices of xi_c . diag[delta] sc0, first vertex in lexicographic
/// order on ties.
InitialCost initial_cost(std::span<const double> delta, const PolarSection& section, std::span<const double> sc0);

struct ObjectiveParts {
    double value = 0.0;        // +inf outside the finite domain
    double expectation = 0.0;  // MC mean of C(S^f(T); delta)
    double cost = 0.0;
    double std_error = 0.0;
    std::vector<double> xi;           // attaining vertex of the cost term
    std::vector<double> subgradient;  // filled on request, empty when value is +inf
};

/// E[C(S^f(T); delta)] + initial_cost(delta) over the batch's terminal values.
ObjectiveParts objective_parts(std::span<const double> delta, const TransformGrid& grid, const PathBatch& batch,
                               const PolarSection& section, std::span<const double> sc0,
                               bool with_subgradient = false);

double objective(std::span<const double> delta, const TransformGrid& grid, const PathBatch& batch,
                 const PolarSection& section, std::span<const double> sc0);

struct PriceOptions {
    double rel_tol = 1e-8;    // objective change
    double delta_tol = 1e-6;  // step in delta
    int max_iter = 2000;
    int curve_points = 41;
    double flat_tol = 1e-10;
};

struct CurvePoint {
    std::vector<double> delta;
    double value;
};

struct PriceReport {
    double price = 0.0;
    std::vector<double> delta_hat;
    std::vector<double> xi_hat;
    double expectation_term = 0.0;
    double cost_term = 0.0;
    double mc_stderr = 0.0;
    /// interior, boundary-zero, or infeasible-direction (the optimum sits on
    /// the edge of the finite domain, where C turns +inf).
    std::string regime;
    bool flat = false;
    std::vector<CurvePoint> curve;
    std::optional<std::vector<double>> offset;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    int evaluations = 0;
};

/// Minimizes the objective over the finite domain {delta_i >= tail slope_i}.
/// dc == 1: golden section on a bracket grown from the domain edge.
/// dc >= 2: projected subgradient descent, then cyclic coordinate searches.
PriceReport minimize_objective(const TransformGrid& grid, const PathBatch& batch, const PolarSection& section,
                               std::span<const double> sc0, const PriceOptions& options = {});

struct PricingInputs {
    const PolarSection& section;
    const PathBatch& batch;
    std::vector<double> sc0;
    TransformGridOptions grid_options;
};

/// Builds G and its envelope for `payoff`, then minimizes. The grid is
/// returned through `grid_out` when given.
PriceReport price(const PayoffSpec& payoff, const PricingInputs& inputs, const PriceOptions& options = {},
                  TransformGrid* grid_out = nullptr);

/// Prices the claim net of an initial endowment x (numeraire units, and
/// costly positions in value at time 0).
PriceReport price_with_offset(const PayoffSpec& payoff, const PricingInputs& inputs, std::span<const double> x,
                              const PriceOptions& options = {}, TransformGrid* grid_out = nullptr);

struct FocResidual {
    double closed_form = 0.0;
    double mc = 0.0;
    double mc_stderr = 0.0;
};

/// Derivative of the dc = 1 objective for the digital-barrier call:
/// -K2~ P[S^f(T) - K1 >= delta K2~] + xi_max S^c(0), with K2~ = K2 xi_min.
FocResidual first_order_residual(double delta, const PayoffSpec& payoff, const MarketModel& model,
                                 const PolarSection& section, const PathBatch& batch);

void write_curve_csv(const PriceReport& report, std::ostream& out);

}  // namespace bhsr
