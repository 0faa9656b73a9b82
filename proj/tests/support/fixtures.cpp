#include "fixtures.hpp"

#include <cmath>

namespace fixture {

Example digital_example(double sc0, int sf_nodes, int sc_nodes) {
    Example e;
    e.model.df = 1;
    e.model.dc = 1;
    e.model.horizon_years = 1.0;
    e.model.s0 = {100.0, sc0};
    e.model.sigma = Eigen::MatrixXd::Zero(2, 2);
    e.model.sigma(0, 0) = kSigmaF;
    e.model.sigma(1, 1) = 0.3;
    e.section = bhsr::build_polar_section(bhsr::CostMatrix(1, {0.0, kLambda12, 0.0, 0.0}));
    e.payoff = bhsr::make_catalog_payoff(bhsr::PayoffKind::digital_barrier_call, 1, 1,
                                         {{"strike_free", kStrike}, {"barrier_costly", kBarrier}}, e.section);
    const double w = 8.0 * kSigmaF;
    e.grid_options.sf_lo = {100.0 * std::exp(-w)};
    e.grid_options.sf_hi = {100.0 * std::exp(w)};
    e.grid_options.sf_nodes = sf_nodes;
    e.grid_options.sc_reference = {sc0};
    e.grid_options.sc_nodes = sc_nodes;
    return e;
}

}  // namespace fixture

namespace fixture {

RandomCase random_dc1_case(std::mt19937_64& rng, int sf_nodes, int sc_nodes) {
    using bhsr::PayoffKind;
    constexpr PayoffKind kinds[] = {PayoffKind::digital_barrier_call, PayoffKind::free_call,
                                    PayoffKind::costly_call_cash,     PayoffKind::costly_capped_call,
                                    PayoffKind::costly_physical_call, PayoffKind::basket_call};
    std::uniform_int_distribution<int> pick(0, 5);
    std::uniform_real_distribution<double> rate(0.0, 0.3);
    std::uniform_real_distribution<double> level(50.0, 150.0);
    RandomCase c;
    c.section = bhsr::build_polar_section(bhsr::CostMatrix(1, {0.0, rate(rng) + 0.01, rate(rng), 0.0}));
    const PayoffKind kind = kinds[pick(rng)];
    const double k = level(rng);
    std::map<std::string, double> params{{"strike", k}, {"strike_free", k}, {"barrier_costly", level(rng)},
                                         {"cap", 0.3 * level(rng)}};
    if (kind == PayoffKind::digital_barrier_call) {
        params.erase("strike");
        params.erase("cap");
    } else {
        params.erase("strike_free");
        params.erase("barrier_costly");
        if (kind != PayoffKind::costly_capped_call) params.erase("cap");
    }
    c.payoff = bhsr::make_catalog_payoff(kind, 1, 1, params, c.section);
    c.grid_options.sf_lo = {20.0};
    c.grid_options.sf_hi = {500.0};
    c.grid_options.sf_nodes = sf_nodes;
    c.grid_options.sc_reference = {level(rng)};
    c.grid_options.sc_nodes = sc_nodes;
    return c;
}

}  // namespace fixture
