#include "bhsr/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "bhsr/errors.hpp"
#include "bhsr/parallel.hpp"
#include "bhsr/simd/kernels.hpp"

namespace bhsr {

namespace {

double mag(const Control& m) { return std::hypot(m[0], m[1]); }

// Free row of sigma at (t, z^f) with the costly coordinate frozen at s0.
Control free_row(const MarketModel& model, double t, double zf) {
    Eigen::MatrixXd sig;
    const std::vector<double> s{zf, model.s0[1]};
    model.volatility(t, s, sig);
    return {sig(0, 0), sig(0, 1)};
}

double clamp_pos(const std::vector<double>& axis, double x) {
    const double h = axis[1] - axis[0];
    return std::clamp((x - axis.front()) / h, 0.0, static_cast<double>(axis.size() - 1));
}

// Linear extension in z = exp(axis) from two inner nodes.
double extrapolate(double v1, double v2, double z0, double z1, double z2) {
    return v1 + (v1 - v2) * (z0 - z1) / (z1 - z2);
}

}  // namespace

std::vector<Control> make_mu_set(double kappa, std::span<const double> kappa_list) {
    if (!(kappa >= 0.0)) throw ValidationError("ControlProblem: kappa must be >= 0");
    std::vector<double> mags;
    auto add = [&](double k) {
        if (k > 0.0) {
            mags.push_back(0.5 * k);
            mags.push_back(k);
        }
    };
    add(kappa);
    for (double k : kappa_list)
        if (k < kappa) add(k);
    std::sort(mags.begin(), mags.end());
    mags.erase(std::unique(mags.begin(), mags.end()), mags.end());
    std::vector<Control> out{{0.0, 0.0}};
    const double r = 1.0 / std::sqrt(2.0);
    const Control patterns[8] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {r, r}, {r, -r}, {-r, r}, {-r, -r}};
    for (double m : mags)
        for (const auto& p : patterns) out.push_back({m * p[0], m * p[1]});
    if (out.size() > 255) throw ValidationError("ControlProblem: more than 255 controls");
    return out;
}

double ValueGrid::value_at(std::size_t slice, double zf, double zc) const {
    const auto& v = slices[slice];
    const double ux = clamp_pos(x_axis, std::log(zf));
    const double uy = clamp_pos(y_axis, std::log(zc));
    const std::size_t nx = x_axis.size();
    const std::size_t ny = y_axis.size();
    const std::size_t i = std::min(static_cast<std::size_t>(ux), nx - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(uy), ny - 2);
    const double a = ux - static_cast<double>(i);
    const double b = uy - static_cast<double>(j);
    return (1 - a) * ((1 - b) * v[i * ny + j] + b * v[i * ny + j + 1]) +
           a * ((1 - b) * v[(i + 1) * ny + j] + b * v[(i + 1) * ny + j + 1]);
}

std::uint8_t ValueGrid::policy_at(double t, double zf, double zc) const {
    const double horizon = slice_times.back();
    const auto n_pol = policy.size();
    auto s = static_cast<std::size_t>(std::floor(t / horizon * static_cast<double>(n_pol)));
    s = std::min(s, n_pol - 1);
    const auto i = static_cast<std::size_t>(std::lround(clamp_pos(x_axis, std::log(zf))));
    const auto j = static_cast<std::size_t>(std::lround(clamp_pos(y_axis, std::log(zc))));
    return policy[s][i * y_axis.size() + j];
}

ValueGrid solve_hjb(const ControlProblem& problem, const TransformGrid& grid, const MarketModel& model,
                    const PolarSection& section) {
    validate_model(model);
    if (model.df != 1 || model.dc != 1 || grid.df != 1 || grid.dc != 1)
        throw ValidationError("solve_hjb: needs df = dc = 1 (d = 2)");
    if (!grid.has_envelope()) throw ValidationError("solve_hjb: envelope not computed");
    if (problem.nodes_x < 5 || problem.nodes_y < 5) throw ValidationError("solve_hjb: need >= 5 nodes per axis");
    if (problem.slices < 1) throw ValidationError("solve_hjb: need >= 1 slice");

    ValueGrid vg;
    vg.kappa = problem.kappa;
    vg.controls = problem.mu_set.empty() ? make_mu_set(problem.kappa) : problem.mu_set;
    if (vg.controls.size() > 255) throw ValidationError("solve_hjb: more than 255 controls");
    bool has_zero = false;
    for (const auto& m : vg.controls) {
        if (mag(m) > problem.kappa * (1.0 + 1e-12) + 1e-15)
            throw ValidationError("ControlProblem invariant violated: control magnitude exceeds kappa");
        has_zero = has_zero || (m[0] == 0.0 && m[1] == 0.0);
    }
    if (!has_zero) throw ValidationError("ControlProblem invariant violated: mu_set must contain 0");

    const double horizon = model.horizon_years;
    const Control sf0 = free_row(model, 0.0, model.s0[0]);
    const double vol_f = mag(sf0);
    const double half_x = std::max(problem.width_x_sd * vol_f * std::sqrt(horizon), 0.05);
    const std::size_t nx = static_cast<std::size_t>(problem.nodes_x);
    const std::size_t ny = static_cast<std::size_t>(problem.nodes_y);
    const double cx = std::log(model.s0[0]);
    const double cy = std::log(model.s0[1]);
    for (std::size_t i = 0; i < nx; ++i) vg.x_axis.push_back(cx - half_x + 2.0 * half_x * i / (nx - 1));
    for (std::size_t j = 0; j < ny; ++j)
        vg.y_axis.push_back(cy - problem.width_y + 2.0 * problem.width_y * j / (ny - 1));
    const double hx = vg.x_axis[1] - vg.x_axis[0];
    const double hy = vg.y_axis[1] - vg.y_axis[0];

    // Free-row coefficients per x node (constant unless the volatility is state dependent).
    auto row_at = [&](double t, std::size_t i) {
        return model.constant_vol() ? sf0 : free_row(model, t, std::exp(vg.x_axis[i]));
    };
    double a_max = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const Control r = row_at(0.0, i);
        a_max = std::max(a_max, r[0] * r[0] + r[1] * r[1]);
    }
    const auto dt_set = problem.dt_kappa > 0.0 ? make_mu_set(problem.dt_kappa) : vg.controls;
    double b_max = 0.0;
    for (const auto& m : dt_set) b_max = std::max(b_max, m[0] * m[0] + m[1] * m[1]);
    const double dt_limit = 1.0 / (a_max / (hx * hx) + b_max / (hy * hy));
    std::size_t n_steps = static_cast<std::size_t>(std::max(1, problem.min_t_steps));
    while (horizon / static_cast<double>(n_steps) > 0.9 * dt_limit) {
        n_steps *= 2;
        ++vg.dt_refinements;
    }
    vg.t_steps = n_steps;
    vg.dt = horizon / static_cast<double>(n_steps);
    vg.cfl_ratio = vg.dt / dt_limit;

    const std::size_t nm = vg.controls.size();
    std::vector<double> caa(nm);
    std::vector<double> cbb(nm);
    std::vector<double> cap(nm);
    std::vector<double> can(nm);
    auto fill_coeffs = [&](const Control& r, std::span<double> a, std::span<double> b, std::span<double> p,
                           std::span<double> q) {
        for (std::size_t m = 0; m < nm; ++m) {
            const auto& mu = vg.controls[m];
            const double c = 2.0 * (r[0] * mu[0] + r[1] * mu[1]);
            a[m] = r[0] * r[0] + r[1] * r[1];
            b[m] = mu[0] * mu[0] + mu[1] * mu[1];
            p[m] = std::max(c, 0.0);
            q[m] = std::min(c, 0.0);
        }
    };

    // Stencil weights of each control: off-centre weights must be nonnegative.
    fill_coeffs(sf0, caa, cbb, cap, can);
    for (std::size_t m = 0; m < nm; ++m) {
        const double c = std::abs(cap[m] + can[m]);
        const double cross = 0.5 * c / (2.0 * hx * hy);
        const double wx = 0.5 * caa[m] * (1.0 / (hx * hx) - 0.5 / hx) - cross;
        const double wy = 0.5 * cbb[m] * (1.0 / (hy * hy) - 0.5 / hy) - cross;
        const double wc = 1.0 - vg.dt * (caa[m] / (hx * hx) + cbb[m] / (hy * hy) - 2.0 * cross);
        if (wx >= 0.0 && wy >= 0.0 && wc >= 0.0) ++vg.monotone_controls;
    }
    vg.monotone = vg.monotone_controls == nm;

    const auto n_slices = static_cast<std::size_t>(problem.slices);
    std::vector<std::size_t> slice_step(n_slices + 1);
    for (std::size_t s = 0; s <= n_slices; ++s) {
        slice_step[s] = static_cast<std::size_t>(std::llround(static_cast<double>(s) * n_steps / n_slices));
        vg.slice_times.push_back(horizon * static_cast<double>(slice_step[s]) / static_cast<double>(n_steps));
    }
    vg.slices.assign(n_slices + 1, {});
    vg.policy.assign(n_slices, std::vector<std::uint8_t>(nx * ny, 0));

    std::vector<double> cur(nx * ny);
    std::vector<double> nxt(nx * ny);
    {
        std::vector<double> sf(1);
        std::vector<double> sc(1);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j) {
                sf[0] = std::exp(vg.x_axis[i]);
                sc[0] = std::exp(vg.y_axis[j]);
                cur[i * ny + j] = grid.ghat_at(sf, sc);
            }
    }
    vg.slices[n_slices] = cur;

    std::vector<double> zx(nx);
    std::vector<double> zy(ny);
    for (std::size_t i = 0; i < nx; ++i) zx[i] = std::exp(vg.x_axis[i]);
    for (std::size_t j = 0; j < ny; ++j) zy[j] = std::exp(vg.y_axis[j]);

    const auto& kern = simd::active();
    const std::size_t inner = ny - 2;
    std::size_t next_slice = n_slices;  // slice index whose step comes next going backwards
    for (std::size_t k = n_steps; k-- > 0;) {
        const double t = horizon * static_cast<double>(k) / static_cast<double>(n_steps);
        while (next_slice > 0 && slice_step[next_slice - 1] > k) --next_slice;
        const bool record = next_slice > 0 && slice_step[next_slice - 1] == k;
        std::uint8_t* arg_base = record ? vg.policy[next_slice - 1].data() : nullptr;
        parallel_blocks(nx - 2, [&](std::size_t r) {
            const std::size_t i = r + 1;
            thread_local std::vector<double> dxx, dyy, dxyp, dxyn, dx, dy, a, b, p, q;
            for (auto* buf : {&dxx, &dyy, &dxyp, &dxyn, &dx, &dy}) buf->resize(inner);
            for (auto* buf : {&a, &b, &p, &q}) buf->resize(nm);
            if (model.constant_vol()) {
                std::copy(caa.begin(), caa.end(), a.begin());
                std::copy(cbb.begin(), cbb.end(), b.begin());
                std::copy(cap.begin(), cap.end(), p.begin());
                std::copy(can.begin(), can.end(), q.begin());
            } else {
                fill_coeffs(row_at(t, i), a, b, p, q);
            }
            const double* up = cur.data() + (i + 1) * ny;
            const double* md = cur.data() + i * ny;
            const double* dn = cur.data() + (i - 1) * ny;
            for (std::size_t j = 1; j + 1 < ny; ++j) {
                const std::size_t o = j - 1;
                dxx[o] = (up[j] - 2.0 * md[j] + dn[j]) / (hx * hx);
                dyy[o] = (md[j + 1] - 2.0 * md[j] + md[j - 1]) / (hy * hy);
                dx[o] = (up[j] - dn[j]) / (2.0 * hx);
                dy[o] = (md[j + 1] - md[j - 1]) / (2.0 * hy);
                dxyp[o] = (up[j + 1] - up[j] - md[j + 1] + 2.0 * md[j] - dn[j] - md[j - 1] + dn[j - 1]) / (2.0 * hx * hy);
                dxyn[o] = -(up[j - 1] - up[j] - md[j - 1] + 2.0 * md[j] - dn[j] - md[j + 1] + dn[j + 1]) / (2.0 * hx * hy);
            }
            const simd::HjbRowInput in{md + 1, dxx.data(), dyy.data(), dxyp.data(), dxyn.data(), dx.data(), dy.data()};
            kern.hjb_row(in, inner, a.data(), b.data(), p.data(), q.data(), nm, vg.dt, nxt.data() + i * ny + 1,
                         arg_base ? arg_base + i * ny + 1 : nullptr);
            double* row = nxt.data() + i * ny;
            row[0] = extrapolate(row[1], row[2], zy[0], zy[1], zy[2]);
            row[ny - 1] = extrapolate(row[ny - 2], row[ny - 3], zy[ny - 1], zy[ny - 2], zy[ny - 3]);
        });
        for (std::size_t j = 0; j < ny; ++j) {
            nxt[j] = extrapolate(nxt[ny + j], nxt[2 * ny + j], zx[0], zx[1], zx[2]);
            nxt[(nx - 1) * ny + j] = extrapolate(nxt[(nx - 2) * ny + j], nxt[(nx - 3) * ny + j], zx[nx - 1],
                                                 zx[nx - 2], zx[nx - 3]);
        }
        if (arg_base) {
            // Edge nodes take the policy of their inner neighbour.
            auto& pol = vg.policy[next_slice - 1];
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                pol[i * ny] = pol[i * ny + 1];
                pol[i * ny + ny - 1] = pol[i * ny + ny - 2];
            }
            for (std::size_t j = 0; j < ny; ++j) {
                pol[j] = pol[ny + j];
                pol[(nx - 1) * ny + j] = pol[(nx - 2) * ny + j];
            }
        }
        std::swap(cur, nxt);
        if (record) vg.slices[next_slice - 1] = cur;
    }
    if (vg.slices[0].empty()) vg.slices[0] = cur;

    vg.root_value = -kInf;
    for (std::size_t v = 0; v < section.n_vertices(); ++v) {
        const double zc = section.vertex(v)[1] * model.s0[1];
        const double val = vg.value_at(0, model.s0[0], zc);
        if (val > vg.root_value) {
            vg.root_value = val;
            vg.root_point = {model.s0[0], zc};
        }
    }
    return vg;
}

SampleStats control_mc_lower_bound(const ValueGrid& values, const TransformGrid& grid, const MarketModel& model,
                                   const PolicyFunction& policy, std::size_t n_paths, std::size_t n_steps,
                                   std::uint64_t seed) {
    validate_model(model);
    if (n_paths < 1 || n_steps < 1) throw ValidationError("control_mc_lower_bound: need paths and steps");
    const double horizon = model.horizon_years;
    const double dt = horizon / static_cast<double>(n_steps);
    const double sq = std::sqrt(dt);
    std::vector<double> out(n_paths);
    const bool antithetic = n_paths % 2 == 0;
    const std::size_t block = 1024;
    std::vector<std::string> errors((n_paths + block - 1) / block);
    parallel_blocks(errors.size(), [&](std::size_t blk) {
        std::mt19937_64 rng(stream_seed(seed, blk));
        std::normal_distribution<double> normal;
        std::vector<double> draws(2 * n_steps);
        std::vector<double> sf(1);
        std::vector<double> sc(1);
        for (std::size_t p = blk * block; p < std::min(n_paths, (blk + 1) * block); ++p) {
            const bool mirror = antithetic && p % 2 == 1;
            if (!mirror)
                for (auto& d : draws) d = normal(rng);
            const double sign = mirror ? -1.0 : 1.0;
            double x = std::log(values.root_point[0]);
            double y = std::log(values.root_point[1]);
            for (std::size_t k = 0; k < n_steps; ++k) {
                const double t = horizon * static_cast<double>(k) / static_cast<double>(n_steps);
                const Control r = free_row(model, t, std::exp(x));
                const Control mu = policy(t, std::exp(x), std::exp(y));
                if (mag(mu) > values.kappa * (1.0 + 1e-12) + 1e-15) {
                    errors[blk] = "control_mc_lower_bound: policy magnitude exceeds kappa";
                    return;
                }
                const double w0 = sign * draws[2 * k] * sq;
                const double w1 = sign * draws[2 * k + 1] * sq;
                x += -0.5 * (r[0] * r[0] + r[1] * r[1]) * dt + r[0] * w0 + r[1] * w1;
                y += -0.5 * (mu[0] * mu[0] + mu[1] * mu[1]) * dt + mu[0] * w0 + mu[1] * w1;
            }
            sf[0] = std::exp(x);
            sc[0] = std::exp(y);
            out[p] = grid.ghat_at(sf, sc);
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw ValidationError(e);
    return sample_stats(out, antithetic);
}

SampleStats control_mc_lower_bound(const ValueGrid& values, const TransformGrid& grid, const MarketModel& model,
                                   std::size_t n_paths, std::size_t n_steps, std::uint64_t seed) {
    PolicyFunction pol = [&](double t, double zf, double zc) { return values.controls[values.policy_at(t, zf, zc)]; };
    return control_mc_lower_bound(values, grid, model, pol, n_paths, n_steps, seed);
}

DpCheck dp_consistency(const ValueGrid& values, const MarketModel& model, int stride, std::size_t n_samples,
                       std::uint64_t seed) {
    DpCheck out;
    out.worst_excess = -kInf;
    const std::size_t nx = values.x_axis.size();
    const std::size_t ny = values.y_axis.size();
    const auto st = static_cast<std::size_t>(std::max(1, stride));
    std::mt19937_64 rng(stream_seed(seed, 0));
    std::normal_distribution<double> normal;
    std::vector<double> z(2 * n_samples);
    for (auto& v : z) v = normal(rng);
    std::vector<double> samples(n_samples);
    for (std::size_t s = 0; s + 1 < values.slices.size(); ++s) {
        const double t = values.slice_times[s];
        const double h = values.slice_times[s + 1] - t;
        if (h <= 0.0) continue;
        const auto& v = values.slices[s];
        for (std::size_t i = st; i + st < nx; i += st) {
            const Control r = free_row(model, t, std::exp(values.x_axis[i]));
            const double a = r[0] * r[0] + r[1] * r[1];
            for (std::size_t j = st; j + st < ny; j += st) {
                const double zc = std::exp(values.y_axis[j]);
                for (std::size_t n = 0; n < n_samples; ++n) {
                    const double x = values.x_axis[i] - 0.5 * a * h + (r[0] * z[2 * n] + r[1] * z[2 * n + 1]) * std::sqrt(h);
                    samples[n] = values.value_at(s + 1, std::exp(x), zc);
                }
                const auto ss = sample_stats(samples, false);
                const double here = v[i * ny + j];
                // Bilinear interpolation overshoots convex stretches by about an eighth of the second difference.
                const double d2 = std::abs(v[(i + 1) * ny + j] - 2.0 * here + v[(i - 1) * ny + j]);
                const double excess = ss.mean - here - 3.0 * ss.std_error;
                ++out.nodes;
                if (excess <= 0.125 * d2 + 1e-12 * (1.0 + std::abs(here))) ++out.passed;
                out.worst_excess = std::max(out.worst_excess, excess);
            }
        }
    }
    return out;
}

void write_value_csv(const ValueGrid& values, std::size_t slice, std::ostream& out) {
    out << "zf,zc,value\n" << std::setprecision(17);
    const std::size_t ny = values.y_axis.size();
    for (std::size_t i = 0; i < values.x_axis.size(); ++i)
        for (std::size_t j = 0; j < ny; ++j)
            out << std::exp(values.x_axis[i]) << ',' << std::exp(values.y_axis[j]) << ','
                << values.slices[slice][i * ny + j] << '\n';
}

}  // namespace bhsr
