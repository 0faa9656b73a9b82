#include "bhsr/hedger.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "bhsr/errors.hpp"
#include "bhsr/numeric.hpp"
#include "bhsr/parallel.hpp"

namespace bhsr {

namespace {

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
}

// Node value with linear extension past either end.
double fetch(const double* v, std::ptrdiff_t n, std::ptrdiff_t i, std::ptrdiff_t stride) {
    if (i < 0) return v[0] + static_cast<double>(i) * (v[stride] - v[0]);
    if (i >= n) return v[(n - 1) * stride] + static_cast<double>(i - n + 1) * (v[(n - 1) * stride] - v[(n - 2) * stride]);
    return v[i * stride];
}

double cubic_1d(const double* v, std::ptrdiff_t n, double u, std::ptrdiff_t stride = 1) {
    if (u <= 0.0) return v[0] + u * (v[stride] - v[0]);
    const double last = static_cast<double>(n - 1);
    if (u >= last) return v[(n - 1) * stride] + (u - last) * (v[(n - 1) * stride] - v[(n - 2) * stride]);
    const auto i = std::min(static_cast<std::ptrdiff_t>(u), n - 2);
    const double t = u - static_cast<double>(i);
    return catmull_rom(fetch(v, n, i - 1, stride), v[i * stride], v[(i + 1) * stride], fetch(v, n, i + 2, stride), t);
}

double cubic_2d(const double* v, std::ptrdiff_t nx, std::ptrdiff_t ny, double ux, double uy) {
    ux = std::clamp(ux, 0.0, static_cast<double>(nx - 1));
    const auto i = std::min(static_cast<std::ptrdiff_t>(ux), nx - 2);
    const double t = ux - static_cast<double>(i);
    double rows[4];
    for (std::ptrdiff_t r = 0; r < 4; ++r) {
        const std::ptrdiff_t ii = std::clamp(i - 1 + r, std::ptrdiff_t{0}, nx - 1);
        rows[r] = cubic_1d(v + ii * ny, ny, uy);
    }
    if (i == 0) rows[0] = 2.0 * rows[1] - rows[2];
    if (i + 2 >= nx) rows[3] = 2.0 * rows[2] - rows[1];
    return catmull_rom(rows[0], rows[1], rows[2], rows[3], t);
}

}  // namespace

std::size_t HedgeSchedule::nodes_per_slice() const {
    std::size_t n = 1;
    for (int m : x_nodes) n *= static_cast<std::size_t>(m);
    return n;
}

double HedgeSchedule::value(std::size_t k, std::span<const double> sf) const {
    const double* v = values.data() + k * nodes_per_slice();
    const double u0 = (std::log(sf[0]) - x_lo[0]) / x_step[0];
    if (df == 1) return cubic_1d(v, x_nodes[0], u0);
    const double u1 = (std::log(sf[1]) - x_lo[1]) / x_step[1];
    return cubic_2d(v, x_nodes[0], x_nodes[1], u0, u1);
}

void HedgeSchedule::phi(std::size_t k, std::span<const double> sf, std::span<double> out) const {
    std::array<double, 2> s{};
    for (int i = 0; i < df; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double lo = x_lo[ui];
        const double hi = x_lo[ui] + x_step[ui] * (x_nodes[ui] - 1);
        const double h = x_step[ui];
        for (int j = 0; j < df; ++j) s[static_cast<std::size_t>(j)] = sf[static_cast<std::size_t>(j)];
        const double x = std::clamp(std::log(sf[ui]), lo, hi);
        const double a = std::max(lo, x - h);
        const double b = std::min(hi, x + h);
        s[ui] = std::exp(b);
        const double vb = value(k, std::span<const double>(s.data(), static_cast<std::size_t>(df)));
        s[ui] = std::exp(a);
        const double va = value(k, std::span<const double>(s.data(), static_cast<std::size_t>(df)));
        // dv/dsf = (dv/dx) / sf at the clamped point.
        out[ui] = (vb - va) / (b - a) / std::exp(x);
    }
}

double HedgeSchedule::terminal_claim(std::span<const double> sf) const {
    return conjugate_C(*grid, sf, delta_hat).value;
}

HedgeSchedule build_schedule(const PriceReport& report, std::shared_ptr<const TransformGrid> grid,
                             const MarketModel& model, std::span<const double> times, const LatticeOptions& options) {
    validate_model(model);
    if (model.df > 2) throw ValidationError("build_schedule: the value lattice supports df <= 2");
    if (!grid || !grid->has_envelope()) throw ValidationError("build_schedule: needs a transform grid with envelope");
    if (times.size() < 2) throw ValidationError("build_schedule: need at least one time step");
    if (!in_conjugate_domain(*grid, report.delta_hat))
        throw NumericError("build_schedule: delta_hat is outside the finite domain of C");
    HedgeSchedule s;
    s.df = model.df;
    s.delta_hat = report.delta_hat;
    s.xi_hat = report.xi_hat;
    s.initial_cost = report.cost_term;
    s.grid = std::move(grid);
    s.times.assign(times.begin(), times.end());
    const auto df = static_cast<std::size_t>(model.df);
    const int nodes = df == 1 ? options.nodes_1d : options.nodes_2d;
    const int nq = df == 1 ? options.quadrature_1d : options.quadrature_2d;

    Eigen::MatrixXd sig;
    model.volatility(0.0, model.s0, sig);
    const double horizon = s.times.back() - s.times.front();
    for (std::size_t i = 0; i < df; ++i) {
        const double vol = sig.row(static_cast<Eigen::Index>(i)).norm();
        const double half = std::max(options.width_sd * vol * std::sqrt(horizon), 0.05);
        const double c = std::log(model.s0[i]);
        s.x_lo.push_back(c - half);
        s.x_step.push_back(2.0 * half / (nodes - 1));
        s.x_nodes.push_back(nodes);
    }
    const std::size_t per = s.nodes_per_slice();
    const std::size_t n_t = s.times.size();
    s.values.assign(n_t * per, 0.0);

    auto node_point = [&](std::size_t j, std::span<double> x) {
        if (df == 1) {
            x[0] = s.x_lo[0] + s.x_step[0] * static_cast<double>(j);
        } else {
            const auto n1 = static_cast<std::size_t>(s.x_nodes[1]);
            x[0] = s.x_lo[0] + s.x_step[0] * static_cast<double>(j / n1);
            x[1] = s.x_lo[1] + s.x_step[1] * static_cast<double>(j % n1);
        }
    };

    {
        double* last = s.values.data() + (n_t - 1) * per;
        std::array<double, 2> x{};
        std::array<double, 2> sf{};
        for (std::size_t j = 0; j < per; ++j) {
            node_point(j, x);
            for (std::size_t i = 0; i < df; ++i) sf[i] = std::exp(x[i]);
            last[j] = s.terminal_claim(std::span<const double>(sf.data(), df));
        }
    }

    // One backward step from slice k+1 into `dst`, with an n-point rule.
    auto step = [&](std::size_t k, int n_rule, double* dst, std::size_t j_begin, std::size_t j_end) {
        const auto q = gauss_hermite(n_rule);
        const double dt = s.times[k + 1] - s.times[k];
        const double* next = s.values.data() + (k + 1) * per;
        Eigen::MatrixXd sg;
        std::vector<double> full(model.s0);
        std::array<double, 2> x{};
        for (std::size_t j = j_begin; j < j_end; ++j) {
            node_point(j, x);
            for (std::size_t i = 0; i < df; ++i) full[i] = std::exp(x[i]);
            model.volatility(s.times[k], full, sg);
            const Eigen::MatrixXd sf_block = sg.topRows(static_cast<Eigen::Index>(df));
            const Eigen::MatrixXd cov = sf_block * sf_block.transpose() * dt;
            double acc = 0.0;
            if (df == 1) {
                const double sd = std::sqrt(cov(0, 0));
                const double mu = x[0] - 0.5 * cov(0, 0);
                for (std::size_t a = 0; a < q.nodes.size(); ++a) {
                    const double u = (mu + sd * q.nodes[a] - s.x_lo[0]) / s.x_step[0];
                    acc += q.weights[a] * cubic_1d(next, s.x_nodes[0], u);
                }
            } else {
                Eigen::LLT<Eigen::Matrix2d> llt(cov.topLeftCorner<2, 2>());
                Eigen::Matrix2d l = llt.matrixL();
                if (llt.info() != Eigen::Success) l = cov.topLeftCorner<2, 2>().cwiseAbs().cwiseSqrt();
                const double m0 = x[0] - 0.5 * cov(0, 0);
                const double m1 = x[1] - 0.5 * cov(1, 1);
                for (std::size_t a = 0; a < q.nodes.size(); ++a)
                    for (std::size_t b = 0; b < q.nodes.size(); ++b) {
                        const double y0 = m0 + l(0, 0) * q.nodes[a];
                        const double y1 = m1 + l(1, 0) * q.nodes[a] + l(1, 1) * q.nodes[b];
                        acc += q.weights[a] * q.weights[b] *
                               cubic_2d(next, s.x_nodes[0], s.x_nodes[1], (y0 - s.x_lo[0]) / s.x_step[0],
                                        (y1 - s.x_lo[1]) / s.x_step[1]);
                    }
            }
            dst[j] = acc;
        }
    };

    const std::size_t chunk = 64;
    const std::size_t n_chunks = (per + chunk - 1) / chunk;
    for (std::size_t k = n_t - 1; k-- > 0;) {
        double* dst = s.values.data() + k * per;
        parallel_blocks(n_chunks, [&](std::size_t c) { step(k, nq, dst, c * chunk, std::min(per, (c + 1) * chunk)); });
    }

    // Quadrature residual of the first step on the central half of the lattice.
    std::vector<double> check(per);
    step(0, 2 * nq, check.data(), 0, per);
    double worst = 0.0;
    std::array<double, 2> x{};
    for (std::size_t j = 0; j < per; ++j) {
        node_point(j, x);
        bool central = true;
        for (std::size_t i = 0; i < df; ++i) {
            const double span = s.x_step[i] * (s.x_nodes[i] - 1);
            central = central && std::abs(x[i] - (s.x_lo[i] + 0.5 * span)) <= 0.25 * span;
        }
        if (central) worst = std::max(worst, std::abs(check[j] - s.values[j]));
    }
    s.martingale_residual = worst;
    return s;
}

DominanceReport verify_dominance(const HedgeSchedule& schedule, const PathBatch& batch, const PayoffSpec& payoff,
                                 const PolarSection& section, double price, const DominanceOptions& options) {
    if (batch.n_recorded == 0) throw ValidationError("verify_dominance: the batch has no recorded paths");
    if (batch.n_steps + 1 != schedule.times.size())
        throw ValidationError("verify_dominance: schedule and batch time grids differ");
    const std::size_t n = batch.n_recorded;
    const std::size_t steps = batch.n_steps;
    const auto df = static_cast<std::size_t>(batch.df);
    const auto dc = static_cast<std::size_t>(batch.dc);
    const std::size_t dim = 1 + dc;
    const std::size_t coarse_stride = steps % 2 == 0 ? 2 : 1;
    const bool digital = payoff.kind == PayoffKind::digital_barrier_call && df == 1 && dc == 1 && !payoff.offset;

    DominanceReport r;
    r.n_paths = n;
    r.n_steps = steps;
    r.n_steps_coarse = steps / coarse_stride;
    r.price = price;
    r.margins.assign(n, 0.0);
    r.chain_of_path.assign(n, 0);

    std::vector<double> err_fine(n);
    std::vector<double> err_coarse(n);
    std::vector<double> margin_coarse(n);
    std::vector<double> sf_err(n);
    std::vector<double> adm_min(n, kInf);
    std::vector<char> units_ok(n, 1);
    std::vector<double> cash_end(n);
    const double v0 = schedule.value(0, batch.state(0, 0).first(df));
    const double x0 = price - schedule.initial_cost;
    const double k2t = digital ? payoff.catalog.barrier * section.min_component(0) : 0.0;

    parallel_blocks((n + 255) / 256, [&](std::size_t blk) {
        std::vector<double> phi(df);
        std::vector<double> phi_c(df);
        std::vector<double> gains;
        std::vector<double> g(dim);
        std::vector<double> diff(dim);
        std::vector<double> amount(dc);
        for (std::size_t p = blk * 256; p < std::min(n, (blk + 1) * 256); ++p) {
            gains.assign(steps, 0.0);
            double cash = x0;
            double gains_c = 0.0;
            for (std::size_t i = 0; i < dc; ++i) amount[i] = schedule.delta_hat[i] * batch.state(p, 0)[df + i];
            for (std::size_t k = 0; k < steps; ++k) {
                const auto s_now = batch.state(p, k);
                const auto s_next = batch.state(p, k + 1);
                schedule.phi(k, s_now.first(df), phi);
                if (k % coarse_stride == 0) schedule.phi(k, s_now.first(df), phi_c);
                double gk = 0.0;
                double gc = 0.0;
                for (std::size_t i = 0; i < df; ++i) {
                    gk += phi[i] * (s_next[i] - s_now[i]);
                    gc += phi_c[i] * (s_next[i] - s_now[i]);
                }
                gains[k] = gk;
                cash += gk;
                gains_c += gc;
                // Admissibility of the running position against the claim's lower bound.
                diff[0] = cash + payoff.growth.c;
                for (std::size_t i = 0; i < df; ++i) diff[0] += payoff.growth.delta_f[i] * s_next[i];
                for (std::size_t i = 0; i < dc; ++i) {
                    // Amount held in costly asset i follows dX = X dS / S.
                    amount[i] *= s_next[df + i] / s_now[df + i];
                    const double units = amount[i] / s_next[df + i];
                    if (std::abs(units - schedule.delta_hat[i]) > 1e-12 * std::max(1.0, std::abs(schedule.delta_hat[i])))
                        units_ok[p] = 0;
                    diff[i + 1] = schedule.delta_hat[i] * s_next[df + i] + payoff.growth.delta * s_next[df + i];
                }
                adm_min[p] = std::min(adm_min[p], liquidation_value(diff, section));
            }
            cash_end[p] = cash;
            sf_err[p] = std::abs(cash - (x0 + pairwise_sum(gains))) / std::max(1.0, std::abs(cash));
            const auto sT = batch.state(p, steps);
            const double c_T = schedule.terminal_claim(sT.first(df));
            err_fine[p] = v0 + pairwise_sum(gains) - c_T;
            err_coarse[p] = v0 + gains_c - c_T;

            payoff.evaluate(sT, g);
            diff[0] = cash - g[0];
            for (std::size_t i = 0; i < dc; ++i) diff[i + 1] = schedule.delta_hat[i] * sT[df + i] - g[i + 1];
            r.margins[p] = liquidation_value(diff, section);
            diff[0] = x0 + gains_c - g[0];
            margin_coarse[p] = liquidation_value(diff, section);
            if (digital) r.chain_of_path[p] = sT[0] - payoff.catalog.strike >= schedule.delta_hat[0] * k2t ? 1 : 2;
        }
    });

    auto rms = [](const std::vector<double>& e) {
        std::vector<double> sq(e.size());
        for (std::size_t k = 0; k < e.size(); ++k) sq[k] = e[k] * e[k];
        return std::sqrt(mean(sq));
    };
    r.rms_error_fine = rms(err_fine);
    r.rms_error_coarse = rms(err_coarse);
    const double nf = static_cast<double>(steps);
    const double nc = static_cast<double>(r.n_steps_coarse);
    r.tol_constant = std::max(r.rms_error_fine * std::sqrt(nf), r.rms_error_coarse * std::sqrt(nc));
    r.error_order = coarse_stride == 2 && r.rms_error_fine > 0.0 ? std::log2(r.rms_error_coarse / r.rms_error_fine) : 0.0;
    r.tolerance = std::isnan(options.tol_override) ? options.z * r.tol_constant / std::sqrt(nf) : options.tol_override;
    const double tol_coarse = std::isnan(options.tol_override) ? options.z * r.tol_constant / std::sqrt(nc) : options.tol_override;

    r.worst_margin = kInf;
    std::size_t coarse_viol = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (r.margins[p] < -r.tolerance) ++r.violations;
        if (margin_coarse[p] < -tol_coarse) ++coarse_viol;
        r.worst_margin = std::min(r.worst_margin, r.margins[p]);
    }
    r.violation_fraction = static_cast<double>(r.violations) / static_cast<double>(n);
    r.violation_fraction_coarse = static_cast<double>(coarse_viol) / static_cast<double>(n);
    for (double eps : options.probe_eps) {
        ProbeResult pr;
        pr.eps = eps;
        pr.price = price * (1.0 - eps);
        std::size_t v = 0;
        pr.worst_margin = kInf;
        for (std::size_t p = 0; p < n; ++p) {
            // Cash is linear in the initial capital.
            const double m = r.margins[p] - eps * price;
            if (m < -r.tolerance) ++v;
            pr.worst_margin = std::min(pr.worst_margin, m);
        }
        pr.violation_fraction = static_cast<double>(v) / static_cast<double>(n);
        r.probes.push_back(pr);
    }
    r.self_financing_error = *std::max_element(sf_err.begin(), sf_err.end());
    r.holdings_constant = std::all_of(units_ok.begin(), units_ok.end(), [](char c) { return c != 0; });
    r.admissibility_min = *std::min_element(adm_min.begin(), adm_min.end());
    for (double a : adm_min)
        if (a < -r.tolerance) ++r.admissibility_violations;

    if (digital) {
        const double lo_bid = section.min_component(0);
        r.chains = {{"chain-1: S^f(T) - K1 >= delta K2~", 0, 0}, {"chain-2: S^f(T) - K1 < delta K2~", 0, 0}};
        for (std::size_t p = 0; p < n; ++p) {
            auto& c = r.chains[static_cast<std::size_t>(r.chain_of_path[p] - 1)];
            ++c.paths;
            // Sell the costly holding at the lowest bid and compare cash with the claim.
            const auto sT = batch.state(p, steps);
            std::array<double, 2> g{};
            payoff.evaluate(sT, g);
            const bool cert = cash_end[p] + lo_bid * schedule.delta_hat[0] * sT[1] - g[0] >= -r.tolerance;
            if (cert) ++c.certified;
            if (cert != (r.margins[p] >= -r.tolerance)) ++r.chain_mismatches;
        }
    }
    return r;
}

void write_margins_csv(const DominanceReport& report, std::ostream& out) {
    out << "path,margin,chain\n" << std::setprecision(17);
    for (std::size_t p = 0; p < report.margins.size(); ++p)
        out << p << ',' << report.margins[p] << ',' << report.chain_of_path[p] << '\n';
}

}  // namespace bhsr
