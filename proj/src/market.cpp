#include "bhsr/market.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bhsr/errors.hpp"
#include "bhsr/numeric.hpp"
#include "bhsr/parallel.hpp"

namespace bhsr {

namespace {

constexpr std::size_t kBlock = 1024;

double d1(double s0, double k, double sig, double t) {
    return (std::log(s0 / k) + 0.5 * sig * sig * t) / (sig * std::sqrt(t));
}

}  // namespace

void MarketModel::volatility(double t, std::span<const double> s, Eigen::MatrixXd& out) const {
    if (constant_vol()) {
        out = sigma;
        return;
    }
    vol_fn(t, s, out);
}

void validate_model(const MarketModel& m) {
    if (m.df < 1 || m.dc < 1) throw ValidationError("MarketModel: df and dc must be >= 1");
    if (static_cast<int>(m.s0.size()) != m.d()) throw ValidationError("MarketModel: s0 must have df+dc entries");
    for (double s : m.s0)
        if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("MarketModel: s0 entries must be positive");
    if (!(m.horizon_years > 0.0)) throw ValidationError("MarketModel: horizon must be positive");
    if (m.constant_vol()) {
        if (m.sigma.rows() != m.d() || m.sigma.cols() != m.d())
            throw ValidationError("MarketModel: sigma must be d x d");
        if (!m.sigma.allFinite()) throw ValidationError("MarketModel: sigma has non-finite entries");
    }
    if (!m.block_certificate) {
        throw ValidationError("MarketModel invariant violated (block condition): the free rows of sigma "
                              "must depend on s^f only");
    }
}

double check_conditioning(const MarketModel& m, double bound) {
    validate_model(m);
    double worst = 0.0;
    Eigen::MatrixXd sig;
    std::vector<double> s(m.s0);
    for (double t : {0.0, 0.5 * m.horizon_years, m.horizon_years}) {
        for (double f : {0.5, 1.0, 2.0}) {
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = m.s0[i] * f;
            m.volatility(t, s, sig);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(sig);
            const auto& sv = svd.singularValues();
            const double smin = sv[sv.size() - 1];
            const double cond = smin > 0.0 ? sv[0] / smin : kInf;
            worst = std::max(worst, cond);
        }
    }
    if (!(worst <= bound)) {
        throw ValidationError("MarketModel invariant violated (invertibility): condition number of sigma " +
                              std::to_string(worst) + " exceeds " + std::to_string(bound));
    }
    return worst;
}

std::string to_string(Scheme s) { return s == Scheme::exact_lognormal ? "exact-lognormal" : "log-euler"; }

PathBatch simulate(const MarketModel& model, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                   const SimulateOptions& options) {
    validate_model(model);
    if (n_paths < 1 || n_steps < 1) throw ValidationError("simulate: n_paths and n_steps must be >= 1");
    const auto d = static_cast<std::size_t>(model.d());
    const auto df = static_cast<std::size_t>(model.df);
    PathBatch b;
    b.n_paths = n_paths;
    b.n_steps = n_steps;
    b.n_recorded = std::min(options.n_recorded, n_paths);
    b.df = model.df;
    b.dc = model.dc;
    b.seed = seed;
    b.scheme = model.constant_vol() && !options.force_euler ? Scheme::exact_lognormal : Scheme::log_euler;
    const double dt = model.horizon_years / static_cast<double>(n_steps);
    for (std::size_t k = 0; k <= n_steps; ++k) b.times.push_back(model.horizon_years * static_cast<double>(k) / n_steps);
    b.terminal.assign(n_paths * d, 0.0);
    b.paths.assign(b.n_recorded * (n_steps + 1) * d, 0.0);
    const bool antithetic = n_paths % 2 == 0;

    // Constant-vol drift and loading in log space.
    Eigen::MatrixXd sig0 = model.constant_vol() ? model.sigma : Eigen::MatrixXd();
    Eigen::VectorXd drift;
    if (model.constant_vol()) drift = -0.5 * (model.sigma * model.sigma.transpose()).diagonal() * dt;
    const double sq = std::sqrt(dt);

    const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
    parallel_blocks(n_blocks, [&](std::size_t blk) {
        std::mt19937_64 rng(stream_seed(seed, blk));
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(static_cast<Eigen::Index>(d));
        Eigen::VectorXd x(static_cast<Eigen::Index>(d));
        Eigen::VectorXd dx(static_cast<Eigen::Index>(d));
        Eigen::MatrixXd sig;
        Eigen::MatrixXd sig_f;
        std::vector<double> s(d);
        std::vector<double> s_free(d);
        std::vector<double> draws(n_steps * d);
        const std::size_t p_end = std::min(n_paths, (blk + 1) * kBlock);
        for (std::size_t p = blk * kBlock; p < p_end; ++p) {
            const bool mirror = antithetic && (p % 2 == 1);
            if (!mirror) {
                for (auto& v : draws) v = normal(rng);
            }
            const double sign = mirror ? -1.0 : 1.0;
            for (std::size_t i = 0; i < d; ++i) x[static_cast<Eigen::Index>(i)] = std::log(model.s0[i]);
            auto record = [&](std::size_t k) {
                if (p >= b.n_recorded) return;
                double* dst = b.paths.data() + (p * (n_steps + 1) + k) * d;
                for (std::size_t i = 0; i < d; ++i) dst[i] = std::exp(x[static_cast<Eigen::Index>(i)]);
            };
            record(0);
            for (std::size_t k = 0; k < n_steps; ++k) {
                for (std::size_t i = 0; i < d; ++i) z[static_cast<Eigen::Index>(i)] = sign * draws[k * d + i];
                if (b.scheme == Scheme::exact_lognormal && model.constant_vol()) {
                    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) {
                        double acc = 0.0;
                        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) acc += sig0(i, j) * z[j];
                        dx[i] = drift[i] + acc * sq;
                    }
                } else {
                    const double t = b.times[k];
                    for (std::size_t i = 0; i < d; ++i) s[i] = std::exp(x[static_cast<Eigen::Index>(i)]);
                    model.volatility(t, s, sig);
                    // Free rows see the costly coordinates frozen at s0.
                    s_free = s;
                    for (std::size_t i = df; i < d; ++i) s_free[i] = model.s0[i];
                    model.volatility(t, s_free, sig_f);
                    sig.topRows(static_cast<Eigen::Index>(df)) = sig_f.topRows(static_cast<Eigen::Index>(df));
                    dx = -0.5 * (sig * sig.transpose()).diagonal() * dt + sig * z * sq;
                }
                x += dx;
                record(k + 1);
            }
            for (std::size_t i = 0; i < d; ++i) b.terminal[p * d + i] = std::exp(x[static_cast<Eigen::Index>(i)]);
        }
    });
    return b;
}

double lognormal_call(double s0, double k, double sig, double t) {
    if (k <= 0.0) return s0;
    if (sig <= 0.0 || t <= 0.0) return std::max(s0 - k, 0.0);
    const double a = d1(s0, k, sig, t);
    const double b = a - sig * std::sqrt(t);
    return s0 * normal_cdf(a) - k * normal_cdf(b);
}

double lognormal_digital(double s0, double k, double sig, double t) {
    if (k <= 0.0) return 1.0;
    if (sig <= 0.0 || t <= 0.0) return s0 >= k ? 1.0 : 0.0;
    return normal_cdf(d1(s0, k, sig, t) - sig * std::sqrt(t));
}

double lognormal_call_delta(double s0, double k, double sig, double t) {
    if (k <= 0.0) return 1.0;
    if (sig <= 0.0 || t <= 0.0) return s0 > k ? 1.0 : 0.0;
    return normal_cdf(d1(s0, k, sig, t));
}

}  // namespace bhsr
