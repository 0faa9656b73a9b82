#pragma once

#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bhsr/cone.hpp"
#include "bhsr/market.hpp"
#include "bhsr/payoff.hpp"
#include "bhsr/pricer.hpp"

namespace bhsr {

struct LatticeOptions {
    int nodes_1d = 801;
    int nodes_2d = 101;
    int quadrature_1d = 20;
    int quadrature_2d = 10;
    double width_sd = 8.0;  // half-width of the log-sf lattice in terminal standard deviations
};

/// Constant costly holdings plus the value surface of the residual claim
/// C(S^f(T); delta_hat) on a (t, log sf) lattice.
class HedgeSchedule {
public:
    std::vector<double> delta_hat;
    std::vector<double> xi_hat;
    double initial_cost = 0.0;
    int df = 1;
    std::vector<double> times;
    std::vector<double> x_lo;  // log sf lattice, uniform per axis
    std::vector<double> x_step;
    std::vector<int> x_nodes;
    std::vector<double> values;  // [time][node], row-major over free axes
    double martingale_residual = 0.0;
    std::shared_ptr<const TransformGrid> grid;

    std::size_t nodes_per_slice() const;
    /// v(t_k, sf), cubic in log sf; linear extrapolation outside the lattice.
    double value(std::size_t k, std::span<const double> sf) const;
    /// Free-asset units held over [t_k, t_k+1): gradient of v(t_k, .) in sf by
    /// central differences, one-sided at the edges, frozen outside.
    void phi(std::size_t k, std::span<const double> sf, std::span<double> out) const;
    /// C(sf; delta_hat) from the transform grid.
    double terminal_claim(std::span<const double> sf) const;
};

/// Backward induction with Gauss-Hermite quadrature over the free block on
/// the given time grid (usually the batch's). df <= 2.
HedgeSchedule build_schedule(const PriceReport& report, std::shared_ptr<const TransformGrid> grid,
                             const MarketModel& model, std::span<const double> times,
                             const LatticeOptions& options = {});

struct DominanceOptions {
    /// Upper normal quantile used in the tolerance (0.999 one-sided).
    double z = 3.090232306167813;
    /// Absolute tolerance; NaN means calibrate from the refinement pair.
    double tol_override = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> probe_eps{0.01, 0.05};
};

struct ProbeResult {
    double eps = 0.0;
    double price = 0.0;
    double violation_fraction = 0.0;
    double worst_margin = 0.0;
};

/// The two certificate chains of the digital-barrier example: paths with
/// S^f(T) - K1 >= delta K2~ (chain 1) and the rest (chain 2). Both reduce to
/// liquidating the costly holding at the lowest bid.
struct ChainStats {
    std::string name;
    std::size_t paths = 0;
    std::size_t certified = 0;
};

struct DominanceReport {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::size_t n_steps_coarse = 0;
    double price = 0.0;
    double tolerance = 0.0;
    double tol_constant = 0.0;   // c in tol = c / sqrt(n_steps)
    double rms_error_fine = 0.0;  // RMS of the discrete hedging error
    double rms_error_coarse = 0.0;
    double error_order = 0.0;     // empirical exponent of RMS error in n_steps
    std::size_t violations = 0;
    double violation_fraction = 0.0;
    double violation_fraction_coarse = 0.0;
    double worst_margin = 0.0;
    std::vector<ProbeResult> probes;
    double self_financing_error = 0.0;
    bool holdings_constant = true;
    double admissibility_min = 0.0;
    std::size_t admissibility_violations = 0;
    std::vector<ChainStats> chains;
    std::size_t chain_mismatches = 0;
    std::vector<double> margins;
    std::vector<int> chain_of_path;
};

/// Runs the schedule along the batch's recorded paths and tests terminal cone
/// dominance X(T) >= g(S(T)) up to a tolerance calibrated from the hedging
/// error at n_steps and n_steps / 2.
DominanceReport verify_dominance(const HedgeSchedule& schedule, const PathBatch& batch, const PayoffSpec& payoff,
                                 const PolarSection& section, double price, const DominanceOptions& options = {});

void write_margins_csv(const DominanceReport& report, std::ostream& out);

}  // namespace bhsr
