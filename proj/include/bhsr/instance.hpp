#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bhsr/cone.hpp"
#include "bhsr/hedger.hpp"
#include "bhsr/market.hpp"
#include "bhsr/payoff.hpp"
#include "bhsr/pricer.hpp"

namespace bhsr {

struct Numerics {
    std::size_t n_paths = 200000;
    std::size_t hedge_paths = 10000;
    std::size_t n_steps = 256;
    std::uint64_t seed = 42;
    int sf_nodes = 801;
    double sf_width_sd = 8.0;
    int sc_nodes = 121;
    double sc_span = 50.0;
    std::vector<double> sc_reference;  // defaults to S^c(0)
    int lambda_level = 0;
    PriceOptions price;
    LatticeOptions lattice;
    DominanceOptions dominance;
    std::vector<double> kappa_list{0.0, 1.0, 2.0, 5.0};
    int hjb_nodes_x = 101;
    int hjb_nodes_y = 101;
    int hjb_slices = 64;
    std::size_t hjb_mc_paths = 20000;
    std::size_t hjb_mc_steps = 64;
    double max_condition_number = 1e8;
};

/// Parsed and validated instance. Costs are normalized and the section is
/// built before the payoff so catalog certificates can use it.
struct Instance {
    MarketModel model;
    CostMatrix costs = CostMatrix::uniform(1, 0.0);
    std::vector<std::string> cost_adjustments;
    PolarSection section;
    PayoffSpec payoff;
    Numerics numerics;
    std::string hash;  // FNV-1a of the canonical JSON (and of the payoff table, if any)

    TransformGridOptions grid_options() const;
};

/// Throws ValidationError naming the offending key or invariant.
Instance load_instance(const std::filesystem::path& path);
Instance parse_instance(const std::string& json_text, const std::filesystem::path& base_dir = {});

}  // namespace bhsr
