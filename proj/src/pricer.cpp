#include "bhsr/pricer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "bhsr/errors.hpp"
#include "bhsr/numeric.hpp"
#include "bhsr/parallel.hpp"

namespace bhsr {

namespace {

constexpr std::size_t kPathBlock = 4096;
constexpr double kGolden = 0.6180339887498949;

struct Evaluator {
    const TransformGrid& grid;
    const PathBatch& batch;
    const PolarSection& section;
    std::span<const double> sc0;
    int count = 0;

    double operator()(std::span<const double> delta) {
        ++count;
        return objective(delta, grid, batch, section, sc0);
    }
};

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Golden section for a convex function on [lo, hi]; returns the best point
// seen (smallest argument on ties).
std::pair<double, double> golden(auto&& f, double lo, double hi, double tol) {
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    std::pair<double, double> best = f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
    while (hi - lo > tol * std::max(1.0, std::abs(best.first))) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = f(x2);
        }
        for (auto [x, v] : {std::pair{x1, f1}, std::pair{x2, f2}})
            if (v < best.second || (v == best.second && x < best.first)) best = {x, v};
    }
    return best;
}

// Minimizes f over [lo, inf): bracket grows geometrically from one unit until
// the objective has increased twice in a row.
std::pair<double, double> minimize_half_line(auto&& f, double lo, double tol) {
    std::vector<double> xs{lo};
    std::vector<double> fs{f(lo)};
    double step = 1.0;
    for (int k = 0; k < 64; ++k) {
        xs.push_back(lo + step);
        fs.push_back(f(xs.back()));
        step *= 2.0;
        const std::size_t m = fs.size();
        if (m >= 3 && fs[m - 1] > fs[m - 2] && fs[m - 2] > fs[m - 3]) break;
    }
    const std::size_t m = fs.size();
    if (!(fs[m - 1] > fs[m - 2])) {
        throw NumericError("unbounded-below: the objective keeps decreasing along the costly holding; "
                           "the payoff's growth certificates are inconsistent with the claim");
    }
    const auto j = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
    const double a = xs[j == 0 ? 0 : j - 1];
    const double b = xs[std::min(j + 1, m - 1)];
    auto best = golden(f, a, b, tol);
    for (std::size_t k = 0; k < m; ++k)
        if (fs[k] < best.second || (fs[k] == best.second && xs[k] < best.first)) best = {xs[k], fs[k]};
    return best;
}

}  // namespace

InitialCost initial_cost(std::span<const double> delta, const PolarSection& section, std::span<const double> sc0) {
    if (static_cast<int>(delta.size()) != section.dc() || static_cast<int>(sc0.size()) != section.dc())
        throw ValidationError("initial_cost: dimension mismatch");
    std::vector<double> x(static_cast<std::size_t>(section.dim()), 0.0);
    for (std::size_t i = 0; i < delta.size(); ++i) x[i + 1] = delta[i] * sc0[i];
    const auto [value, idx] = section.max_dot(x);
    const auto v = section.vertex(idx);
    return {value, std::vector<double>(v.begin(), v.end()), idx};
}

ObjectiveParts objective_parts(std::span<const double> delta, const TransformGrid& grid, const PathBatch& batch,
                               const PolarSection& section, std::span<const double> sc0, bool with_subgradient) {
    ObjectiveParts out;
    const auto ic = initial_cost(delta, section, sc0);
    out.cost = ic.value;
    out.xi = ic.vertex;
    if (!in_conjugate_domain(grid, delta)) {
        out.value = kInf;
        out.expectation = kInf;
        return out;
    }
    const auto df = static_cast<std::size_t>(grid.df);
    const auto dc = static_cast<std::size_t>(grid.dc);
    const std::size_t n = batch.n_paths;
    std::vector<double> vals(n);
    const std::size_t n_blocks = (n + kPathBlock - 1) / kPathBlock;
    std::vector<double> grad_blocks(with_subgradient ? n_blocks * dc : 0, 0.0);
    const Conjugate conj(grid, delta);
    parallel_blocks(n_blocks, [&](std::size_t b) {
        std::vector<double> pt(dc);
        for (std::size_t p = b * kPathBlock; p < std::min(n, (b + 1) * kPathBlock); ++p) {
            const auto r = conj(batch.terminal_at(p).first(df));
            vals[p] = r.value;
            if (with_subgradient) {
                grid.sc_point(r.argmax, pt);
                for (std::size_t i = 0; i < dc; ++i) grad_blocks[b * dc + i] -= pt[i];
            }
        }
    });
    const auto st = sample_stats(vals, n % 2 == 0);
    out.expectation = st.mean;
    out.std_error = st.std_error;
    out.value = out.expectation + out.cost;
    if (with_subgradient) {
        out.subgradient.assign(dc, 0.0);
        for (std::size_t b = 0; b < n_blocks; ++b)
            for (std::size_t i = 0; i < dc; ++i) out.subgradient[i] += grad_blocks[b * dc + i];
        for (std::size_t i = 0; i < dc; ++i)
            out.subgradient[i] = out.subgradient[i] / static_cast<double>(n) + ic.vertex[i + 1] * sc0[i];
    }
    return out;
}

double objective(std::span<const double> delta, const TransformGrid& grid, const PathBatch& batch,
                 const PolarSection& section, std::span<const double> sc0) {
    return objective_parts(delta, grid, batch, section, sc0).value;
}

PriceReport minimize_objective(const TransformGrid& grid, const PathBatch& batch, const PolarSection& section,
                               std::span<const double> sc0, const PriceOptions& options) {
    if (!grid.has_envelope()) throw NumericError("pricer: envelope not computed");
    if (batch.df != grid.df || batch.dc != grid.dc) throw ValidationError("pricer: batch and grid dimensions differ");
    const auto dc = static_cast<std::size_t>(grid.dc);
    std::vector<double> lo(dc);
    for (std::size_t i = 0; i < dc; ++i) {
        if (grid.tails[i].kind == CostlyGrowth::superlinear)
            throw NumericError("no-finite-domain: C is +inf for every holding of costly asset " + std::to_string(i));
        lo[i] = grid.tails[i].slope;
    }
    Evaluator eval{grid, batch, section, sc0};
    PriceReport rep;
    std::vector<double> delta(dc);

    if (dc == 1) {
        auto f1 = [&](double x) {
            const double d[1] = {x};
            return eval(d);
        };
        auto best = minimize_half_line(f1, lo[0], options.delta_tol);
        // Flat stretch: move to its left end.
        const double h = std::max(1e-3 * std::abs(best.first), 1e-6);
        double fmin = best.second;
        double fmax = best.second;
        for (double x : {best.first - h, best.first - h / 2, best.first + h / 2, best.first + h}) {
            if (x < lo[0]) continue;
            const double v = f1(x);
            fmin = std::min(fmin, v);
            fmax = std::max(fmax, v);
        }
        if (fmax - fmin < options.flat_tol) {
            rep.flat = true;
            double a = lo[0];
            double b = best.first;
            if (f1(a) <= best.second + options.flat_tol) {
                b = a;
            } else {
                while (b - a > options.delta_tol * std::max(1.0, std::abs(b))) {
                    const double m = 0.5 * (a + b);
                    if (f1(m) <= best.second + options.flat_tol) b = m;
                    else a = m;
                }
            }
            best.first = b;
        }
        delta[0] = best.first;
    } else {
        for (std::size_t i = 0; i < dc; ++i) delta[i] = std::max(0.0, lo[i]);
        auto parts = objective_parts(delta, grid, batch, section, sc0, true);
        ++eval.count;
        std::vector<double> best_delta = delta;
        double best_val = parts.value;
        const double eta0 = 0.5 * std::max(1.0, *std::max_element(delta.begin(), delta.end())) /
                            std::max(norm(parts.subgradient), 1e-12);
        double prev = parts.value;
        for (int k = 0; k < options.max_iter; ++k) {
            const double eta = eta0 / std::sqrt(static_cast<double>(k + 1));
            std::vector<double> next(dc);
            double step = 0.0;
            for (std::size_t i = 0; i < dc; ++i) {
                next[i] = std::max(lo[i], delta[i] - eta * parts.subgradient[i]);
                step += (next[i] - delta[i]) * (next[i] - delta[i]);
            }
            delta = next;
            parts = objective_parts(delta, grid, batch, section, sc0, true);
            ++eval.count;
            if (parts.value < best_val) {
                best_val = parts.value;
                best_delta = delta;
            }
            if (std::sqrt(step) < options.delta_tol &&
                std::abs(parts.value - prev) < options.rel_tol * std::max(1.0, std::abs(prev)))
                break;
            prev = parts.value;
        }
        // Cyclic one-dimensional polishing.
        delta = best_delta;
        for (int round = 0; round < 3; ++round) {
            for (std::size_t i = 0; i < dc; ++i) {
                auto fi = [&](double x) {
                    std::vector<double> d = delta;
                    d[i] = x;
                    return eval(d);
                };
                auto r = minimize_half_line(fi, lo[i], options.delta_tol);
                if (r.second < best_val) {
                    best_val = r.second;
                    delta[i] = r.first;
                }
            }
        }
    }

    const auto parts = objective_parts(delta, grid, batch, section, sc0);
    rep.delta_hat = delta;
    rep.xi_hat = parts.xi;
    rep.expectation_term = parts.expectation;
    rep.cost_term = parts.cost;
    rep.price = parts.expectation + parts.cost;
    rep.mc_stderr = parts.std_error;
    rep.n_paths = batch.n_paths;
    rep.seed = batch.seed;
    if (!std::isfinite(rep.price)) throw NumericError("no-finite-domain: objective is +inf at the optimum");
    const bool all_zero = std::all_of(delta.begin(), delta.end(), [](double x) { return x == 0.0; });
    bool on_edge = false;
    for (std::size_t i = 0; i < dc; ++i) on_edge = on_edge || (delta[i] == lo[i] && lo[i] != 0.0);
    rep.regime = all_zero ? "boundary-zero" : on_edge ? "infeasible-direction" : "interior";

    // Objective curve for inspection.
    const int np = std::max(2, options.curve_points);
    if (dc == 1) {
        const double width = std::max(2.0 * (delta[0] - lo[0]), 1.0);
        for (int k = 0; k < np; ++k) {
            const double x = lo[0] + width * k / (np - 1);
            const double d[1] = {x};
            rep.curve.push_back({{x}, eval(d)});
        }
    } else {
        for (std::size_t i = 0; i < dc; ++i) {
            const double width = std::max(2.0 * (delta[i] - lo[i]), 1.0);
            for (int k = 0; k < np; ++k) {
                std::vector<double> d = delta;
                d[i] = lo[i] + width * k / (np - 1);
                const double v = eval(d);
                rep.curve.push_back({d, v});
            }
        }
    }
    rep.evaluations = eval.count;
    return rep;
}

PriceReport price(const PayoffSpec& payoff, const PricingInputs& in, const PriceOptions& options,
                  TransformGrid* grid_out) {
    auto grid = concave_envelope(payoff, in.section, build_transform_grid(payoff, in.section, in.grid_options));
    auto rep = minimize_objective(grid, in.batch, in.section, in.sc0, options);
    if (grid_out) *grid_out = std::move(grid);
    return rep;
}

PriceReport price_with_offset(const PayoffSpec& payoff, const PricingInputs& in, std::span<const double> x,
                              const PriceOptions& options, TransformGrid* grid_out) {
    auto rep = price(with_offset(payoff, x, in.sc0), in, options, grid_out);
    rep.offset = std::vector<double>(x.begin(), x.end());
    return rep;
}

FocResidual first_order_residual(double delta, const PayoffSpec& payoff, const MarketModel& model,
                                 const PolarSection& section, const PathBatch& batch) {
    if (payoff.kind != PayoffKind::digital_barrier_call || payoff.df != 1 || payoff.dc != 1 || payoff.offset)
        throw ValidationError("first_order_residual: needs the dc = 1 digital-barrier call");
    if (!model.constant_vol()) throw ValidationError("first_order_residual: needs constant volatility");
    const double k1 = payoff.catalog.strike;
    const double k2t = payoff.catalog.barrier * section.min_component(0);
    const double up = section.max_component(0);
    const double sig_f = model.sigma.row(0).norm();
    const double level = k1 + delta * k2t;
    FocResidual r;
    r.closed_form = -k2t * lognormal_digital(model.s0[0], level, sig_f, model.horizon_years) + up * model.s0[1];
    std::vector<double> ind(batch.n_paths);
    for (std::size_t p = 0; p < batch.n_paths; ++p) ind[p] = batch.terminal_at(p)[0] - k1 >= delta * k2t ? 1.0 : 0.0;
    const auto st = sample_stats(ind, batch.n_paths % 2 == 0);
    r.mc = -k2t * st.mean + up * model.s0[1];
    r.mc_stderr = k2t * st.std_error;
    return r;
}

void write_curve_csv(const PriceReport& report, std::ostream& out) {
    const std::size_t dc = report.delta_hat.size();
    for (std::size_t i = 0; i < dc; ++i) out << "delta" << i + 1 << ',';
    out << "objective\n" << std::setprecision(17);
    for (const auto& c : report.curve) {
        for (double d : c.delta) out << d << ',';
        out << c.value << '\n';
    }
}

}  // namespace bhsr
