#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bhsr/cone.hpp"
#include "bhsr/market.hpp"
#include "bhsr/numeric.hpp"
#include "bhsr/payoff.hpp"

namespace bhsr {

/// Control mu acting on the costly row of the controlled volatility; d = 2,
/// so mu is a 1 x 2 row.
using Control = std::array<double, 2>;

/// {0} plus the eight sign patterns with entries in {-1, 0, 1} (normalized),
/// scaled by kappa'/2 and kappa' for every kappa' <= kappa in `kappa_list`
/// (kappa itself always included). Nested in kappa by construction.
std::vector<Control> make_mu_set(double kappa, std::span<const double> kappa_list = {});

struct ControlProblem {
    double kappa = 0.0;
    std::vector<Control> mu_set;  // empty: make_mu_set(kappa)
    int nodes_x = 101;
    int nodes_y = 101;
    double width_x_sd = 6.0;  // half-width of the log z^f lattice in terminal sd
    double width_y = 4.0;     // half-width of the log z^c lattice
    /// Largest diffusion used for the time step; 0 means the problem's own
    /// mu_set. Sharing it across a kappa list keeps the time grids identical.
    double dt_kappa = 0.0;
    int min_t_steps = 1;
    int slices = 64;
};

struct ValueGrid {
    double kappa = 0.0;
    std::vector<Control> controls;
    std::vector<double> x_axis;  // log z^f
    std::vector<double> y_axis;  // log z^c
    std::size_t t_steps = 0;
    double dt = 0.0;
    double cfl_ratio = 0.0;  // dt over the stability limit of the largest diffusion
    int dt_refinements = 0;
    bool monotone = false;   // every control's stencil has nonnegative weights
    std::size_t monotone_controls = 0;
    std::string boundary = "linear extrapolation in z at all four edges";
    std::vector<double> slice_times;
    std::vector<std::vector<double>> slices;  // value at slice_times, [ix * ny + iy]
    std::vector<std::vector<std::uint8_t>> policy;  // argmax control on [slice, next slice)
    double root_value = 0.0;  // max over vertices of v(0, s0^f, xi_c s0^c)
    Control root_point{};     // (z^f, z^c) attaining root_value

    /// Bilinear in (log z^f, log z^c), clamped to the lattice.
    double value_at(std::size_t slice, double zf, double zc) const;
    std::uint8_t policy_at(double t, double zf, double zc) const;
    const std::vector<double>& terminal() const { return slices.back(); }
};

/// Explicit backward scheme for v_t + 0.5 sup_mu Tr[sigma_mu' D^2 v sigma_mu] = 0
/// in log coordinates with terminal value Ghat. Needs df = dc = 1.
ValueGrid solve_hjb(const ControlProblem& problem, const TransformGrid& grid, const MarketModel& model,
                    const PolarSection& section);

using PolicyFunction = std::function<Control(double t, double zf, double zc)>;

/// MC mean of Ghat(Z^mu(T)) from the root point under a fixed policy. Throws
/// ValidationError if the policy returns |mu| > kappa.
SampleStats control_mc_lower_bound(const ValueGrid& values, const TransformGrid& grid, const MarketModel& model,
                                   const PolicyFunction& policy, std::size_t n_paths, std::size_t n_steps,
                                   std::uint64_t seed);

/// Same, with the argmax policy of the solved grid.
SampleStats control_mc_lower_bound(const ValueGrid& values, const TransformGrid& grid, const MarketModel& model,
                                   std::size_t n_paths, std::size_t n_steps, std::uint64_t seed);

struct DpCheck {
    std::size_t nodes = 0;
    std::size_t passed = 0;
    double worst_excess = 0.0;  // max of E[v(t+h, Z^0)] - v(t, z) - 3 se
};

/// Dynamic programming consistency: v(t, z) >= E[v(t + h, Z^0_{t+h})] for the
/// uncontrolled move, on every `stride`-th interior node of each slice pair.
DpCheck dp_consistency(const ValueGrid& values, const MarketModel& model, int stride, std::size_t n_samples,
                       std::uint64_t seed);

/// Columns zf, zc, value for one slice.
void write_value_csv(const ValueGrid& values, std::size_t slice, std::ostream& out);

}  // namespace bhsr
