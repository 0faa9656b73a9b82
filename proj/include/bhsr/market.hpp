#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bhsr {

/// State-dependent volatility: fills the d x d matrix sigma(t, s).
using VolFunction = std::function<void(double t, std::span<const double> s, Eigen::MatrixXd& out)>;

/// Driftless diffusion dS = diag[S] sigma(t, S) dW. Coordinates 0..df-1 are
/// the free assets, df..d-1 the costly ones.
struct MarketModel {
    int df = 1;
    int dc = 1;
    double horizon_years = 1.0;
    std::vector<double> s0;
    Eigen::MatrixXd sigma;  // constant volatility, used when vol_fn is empty
    VolFunction vol_fn;
    /// The free rows of sigma depend on s^f only.
    bool block_certificate = true;

    int d() const { return df + dc; }
    bool constant_vol() const { return !static_cast<bool>(vol_fn); }
    void volatility(double t, std::span<const double> s, Eigen::MatrixXd& out) const;
    std::vector<double> sc0() const { return {s0.begin() + df, s0.end()}; }
    std::vector<double> sf0() const { return {s0.begin(), s0.begin() + df}; }
};

/// Throws ValidationError on inconsistent dimensions or nonpositive prices.
void validate_model(const MarketModel& model);

/// Largest condition number of sigma over a few sampled (t, s) around s0.
/// Throws ValidationError when it exceeds `bound` (singular counts as +inf).
double check_conditioning(const MarketModel& model, double bound);

enum class Scheme { exact_lognormal, log_euler };
std::string to_string(Scheme s);

/// Simulated prices. Terminal values are kept for every path; full
/// trajectories only for the first n_recorded paths.
struct PathBatch {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::size_t n_recorded = 0;
    int df = 1;
    int dc = 1;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::exact_lognormal;
    std::vector<double> times;     // n_steps + 1
    std::vector<double> terminal;  // n_paths x d
    std::vector<double> paths;     // n_recorded x (n_steps + 1) x d

    int d() const { return df + dc; }
    std::span<const double> terminal_at(std::size_t p) const {
        return {terminal.data() + p * static_cast<std::size_t>(d()), static_cast<std::size_t>(d())};
    }
    std::span<const double> state(std::size_t p, std::size_t k) const {
        const auto dd = static_cast<std::size_t>(d());
        return {paths.data() + (p * (n_steps + 1) + k) * dd, dd};
    }
};

struct SimulateOptions {
    std::size_t n_recorded = 0;
    /// Forces the log-Euler scheme even for constant volatility.
    bool force_euler = false;
};

/// Paths are generated in blocks of 1024 with an independent generator per
/// block, so results do not depend on the number of workers. Consecutive
/// paths form antithetic pairs when n_paths is even.
PathBatch simulate(const MarketModel& model, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                   const SimulateOptions& options = {});

/// prefix.bin (little-endian doubles: terminal, then paths) and prefix.json.
void save_batch(const PathBatch& batch, const std::filesystem::path& prefix);
PathBatch load_batch(const std::filesystem::path& prefix);

/// E[(S(T) - k)^+] for driftless lognormal S.
double lognormal_call(double s0, double k, double sig, double t);
/// P[S(T) >= k] = Phi(d2).
double lognormal_digital(double s0, double k, double sig, double t);
/// dE[(S(T) - k)^+]/ds0 = Phi(d1).
double lognormal_call_delta(double s0, double k, double sig, double t);

}  // namespace bhsr
