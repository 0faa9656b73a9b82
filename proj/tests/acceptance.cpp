// Acceptance run: one PASS/FAIL line per criterion, details on the lines below it.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <limits>
#include <algorithm>

#include "bhsr/cone.hpp"
#include "bhsr/hedger.hpp"
#include "bhsr/hjb.hpp"
#include "bhsr/instance.hpp"
#include "bhsr/parallel.hpp"
#include "bhsr/pricer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bhsr;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int n, bool ok, const std::string& title, const std::ostringstream& detail) {
    std::cout << "ACCEPTANCE " << n << " " << (ok ? "PASS" : "FAIL") << ": " << title << '\n' << detail.str() << std::flush;
    failures += ok ? 0 : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Case {
    Instance inst;
    PathBatch batch;
    std::shared_ptr<TransformGrid> grid;
    PriceReport report;
    double seconds = 0.0;
    double sig_f = 0.0;
    double k2_tilde = 0.0;
    double up = 0.0;
};

Case run_case(const std::string& file, bool record) {
    Case c{load_instance(fs::path(BHSR_INSTANCE_DIR) / file), {}, std::make_shared<TransformGrid>(), {}};
    const auto& n = c.inst.numerics;
    const auto t0 = std::chrono::steady_clock::now();
    SimulateOptions so;
    so.n_recorded = record ? n.hedge_paths : 0;
    c.batch = simulate(c.inst.model, n.n_paths, n.n_steps, n.seed, so);
    PricingInputs in{c.inst.section, c.batch, c.inst.model.sc0(), c.inst.grid_options()};
    c.report = price(c.inst.payoff, in, n.price, c.grid.get());
    c.seconds = seconds_since(t0);
    c.sig_f = c.inst.model.sigma.row(0).norm();
    // Raw instance rates: account 0 is cash, account 1 the costly asset.
    c.k2_tilde = c.inst.payoff.catalog.barrier / (1.0 + c.inst.costs(1, 0));
    c.up = 1.0 + c.inst.costs(0, 1);
    return c;
}

void criterion1(const Case& e1) {
    std::ostringstream d;
    const double ref = oracle::bs_call(e1.inst.model.s0[0], e1.inst.payoff.catalog.strike, e1.sig_f,
                                       e1.inst.model.horizon_years);
    const double tol = std::max(3.0 * e1.report.mc_stderr, 0.005 * ref);
    const bool zero = e1.report.delta_hat[0] == 0.0;
    const bool regime = e1.report.regime == "boundary-zero";
    const bool close = std::abs(e1.report.price - ref) <= tol;
    const bool fast = e1.seconds < 30.0;
    d << "  delta_hat = " << e1.report.delta_hat[0] << " (must be exactly 0), regime " << e1.report.regime << '\n'
      << "  price = " << e1.report.price << ", closed form " << ref << ", |diff| = " << std::abs(e1.report.price - ref)
      << " <= tol " << tol << " (3 stderr = " << 3.0 * e1.report.mc_stderr << ")\n"
      << "  n_paths = " << e1.report.n_paths << ", single-threaded simulate+price " << e1.seconds << " s (< 30)\n";
    verdict(1, zero && regime && close && fast, "worked example case 1 (E1)", d);
}

void criterion2(const Case& e2) {
    std::ostringstream d;
    const auto& m = e2.inst.model;
    const auto ref = oracle::digital_barrier_case2(m.s0[0], e2.sig_f, m.horizon_years, e2.inst.payoff.catalog.strike,
                                                   e2.k2_tilde, e2.up, m.s0[1]);
    const double rel = std::abs(e2.report.delta_hat[0] - ref.delta) / ref.delta;
    const double tol = std::max(3.0 * e2.report.mc_stderr, 0.005 * ref.price);
    const auto foc = first_order_residual(e2.report.delta_hat[0], e2.inst.payoff, m, e2.inst.section, e2.batch);
    const bool ok_delta = rel <= 1e-2;
    const bool ok_price = std::abs(e2.report.price - ref.price) <= tol;
    const bool ok_foc = std::abs(foc.mc) <= 3.0 * foc.mc_stderr;
    d << "  delta_hat = " << e2.report.delta_hat[0] << ", root-find oracle " << ref.delta << ", rel err " << rel
      << " (<= 1e-2)\n"
      << "  price = " << e2.report.price << ", oracle " << ref.price << ", |diff| = " << std::abs(e2.report.price - ref.price)
      << " <= tol " << tol << '\n'
      << "  first_order_residual at delta_hat: mc " << foc.mc << " (3 stderr = " << 3.0 * foc.mc_stderr
      << "), closed form " << foc.closed_form << '\n';
    verdict(2, ok_delta && ok_price && ok_foc, "worked example case 2 (E2)", d);
}

void criterion3() {
    std::ostringstream d;
    const auto t0 = std::chrono::steady_clock::now();
    auto e2 = run_case("e2.json", true);
    const auto sched = build_schedule(e2.report, e2.grid, e2.inst.model, e2.batch.times, e2.inst.numerics.lattice);
    DominanceOptions opts = e2.inst.numerics.dominance;
    opts.probe_eps = {0.01};
    const auto dom = verify_dominance(sched, e2.batch, e2.inst.payoff, e2.inst.section, e2.report.price, opts);
    const double secs = seconds_since(t0);
    const double probe = dom.probes.at(0).violation_fraction;
    const bool ok_dom = dom.violation_fraction <= 0.001;
    const bool ok_probe = probe > 0.0 && probe >= 10.0 * dom.violation_fraction;
    d << "  paths " << dom.n_paths << ", steps " << dom.n_steps << ", tolerance " << dom.tolerance
      << " (RMS hedging error " << dom.rms_error_fine << " at " << dom.n_steps << " steps, " << dom.rms_error_coarse
      << " at " << dom.n_steps_coarse << ")\n"
      << "  violation_fraction at p = " << dom.violation_fraction << " (<= 0.001), worst margin " << dom.worst_margin
      << '\n'
      << "  probe at 0.99 p: violation_fraction " << probe << " (needs > 0 and >= 10x the above), worst margin "
      << dom.probes.at(0).worst_margin << '\n'
      << "  chains certified: " << dom.chains.at(0).certified << "/" << dom.chains.at(0).paths << " and "
      << dom.chains.at(1).certified << "/" << dom.chains.at(1).paths << ", mismatches " << dom.chain_mismatches << '\n'
      << "  runtime " << secs << " s (< 120)\n";
    verdict(3, ok_dom && ok_probe && secs < 120.0, "hedging dominance and tightness probe (E2)", d);
}

struct HjbRow {
    double kappa;
    double value;
    double coarse;
};

void criterion4(const Case& e1, const Case& e2) {
    std::ostringstream d;
    bool ok = true;
    for (const Case* c : {&e1, &e2}) {
        const auto& n = c->inst.numerics;
        std::vector<double> kappas = n.kappa_list;
        const double kmax = *std::max_element(kappas.begin(), kappas.end());
        auto solve = [&](double k, int nx, int ny) {
            ControlProblem cp;
            cp.kappa = k;
            cp.mu_set = make_mu_set(k, kappas);
            cp.nodes_x = nx;
            cp.nodes_y = ny;
            cp.dt_kappa = kmax;
            cp.slices = 4;
            return solve_hjb(cp, *c->grid, c->inst.model, c->inst.section).root_value;
        };
        std::vector<HjbRow> rows;
        for (double k : kappas)
            rows.push_back({k, solve(k, n.hjb_nodes_x, n.hjb_nodes_y), solve(k, (n.hjb_nodes_x + 1) / 2, (n.hjb_nodes_y + 1) / 2)});
        const double p = c->report.price;
        d << "  " << (c == &e1 ? "E1" : "E2") << ": p = " << p << " (stderr " << c->report.mc_stderr << ")\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            const double scheme_tol = std::abs(r.value - r.coarse);
            const double tol = 3.0 * c->report.mc_stderr + scheme_tol;
            const bool below = r.value <= p + tol;
            const bool mono = i == 0 || r.value >= rows[i - 1].value - 1e-12;
            ok = ok && below && mono;
            d << "    kappa " << r.kappa << ": v = " << r.value << ", half-mesh v = " << r.coarse << ", v - p = "
              << r.value - p << " <= tol " << tol << (below ? "" : "  VIOLATED")
              << (mono ? "" : "  NOT MONOTONE") << '\n';
        }
        const double gap = (p - rows.back().value) / p;
        d << "    gap (p - v_" << rows.back().kappa << ")/p = " << gap;
        if (c == &e2) {
            d << (gap <= 0.15 ? " (<= 0.15 target met)" : " (above 0.15 target: flagged, not failed)");
        }
        d << '\n';
    }
    verdict(4, ok, "lower-bound chain v_kappa <= p, nondecreasing in kappa", d);
}

void criterion5() {
    std::ostringstream d;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::size_t dominance_bad = 0, concave_bad = 0, fenchel_bad = 0, hull_bad = 0, nodes = 0, fenchel_checks = 0;
    double worst_hull = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto c = fixture::random_dc1_case(rng);
        const auto g = concave_envelope(c.payoff, c.section, build_transform_grid(c.payoff, c.section, c.grid_options));
        const auto& x = g.sc_axes[0];
        std::vector<std::vector<double>> deltas;
        std::vector<Conjugate> conj;
        for (int j = 0; j < 20; ++j) deltas.push_back({g.tails[0].slope + u(rng)});
        for (const auto& dv : deltas) conj.emplace_back(g, dv);
        std::vector<double> sf(1);
        for (std::size_t f = 0; f < g.sf_count(); ++f) {
            const auto gv = g.g_fiber(f);
            const auto hv = g.ghat_fiber(f);
            const auto ref = oracle::concave_majorant(x, {gv.begin(), gv.end()}, g.tails[0].slope);
            for (std::size_t k = 0; k < x.size(); ++k) {
                ++nodes;
                if (hv[k] < gv[k] - 1e-12) ++dominance_bad;
                const double err = std::abs(hv[k] - ref[k]) / (1.0 + std::abs(ref[k]));
                worst_hull = std::max(worst_hull, err);
                if (err > 1e-9) ++hull_bad;
                if (k > 0 && k + 1 < x.size()) {
                    const double l = (hv[k] - hv[k - 1]) / (x[k] - x[k - 1]);
                    const double r = (hv[k + 1] - hv[k]) / (x[k + 1] - x[k]);
                    if (r > l + 1e-9 * (1.0 + std::abs(l))) ++concave_bad;
                }
            }
            g.sf_point(f, sf);
            for (std::size_t j = 0; j < conj.size(); ++j) {
                const double cv = conj[j](sf).value;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    ++fenchel_checks;
                    if (cv < hv[k] - deltas[j][0] * x[k] - 1e-9 * (1.0 + std::abs(hv[k]))) ++fenchel_bad;
                }
            }
        }
    }
    d << "  50 random dc=1 catalog payoffs, " << nodes << " grid nodes\n"
      << "  Ghat < G: " << dominance_bad << ", concavity breaks: " << concave_bad << '\n'
      << "  Fenchel checks (20 deltas per payoff): " << fenchel_checks << ", failures " << fenchel_bad << '\n'
      << "  hull vs brute-force majorant: " << hull_bad << " nodes beyond 1e-9 (worst rel diff " << worst_hull << ")\n";
    verdict(5, dominance_bad == 0 && concave_bad == 0 && fenchel_bad == 0 && hull_bad == 0, "transform suite", d);
}

std::vector<double> random_rates(int dc, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.001, 0.3);
    const int n = dc + 1;
    std::vector<double> r(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) r[static_cast<std::size_t>(i * n + j)] = u(rng);
    return r;
}

bool same_vertex_set(const PolarSection& s, const std::vector<std::vector<double>>& ref, int offset) {
    if (s.n_vertices() != ref.size()) return false;
    for (const auto& r : ref) {
        int hits = 0;
        for (std::size_t k = 0; k < s.n_vertices(); ++k) {
            const auto v = s.vertex(k);
            bool same = true;
            for (std::size_t c = 0; c < r.size(); ++c)
                same = same && std::abs(v[c + static_cast<std::size_t>(offset)] - r[c]) < 1e-9;
            hits += same;
        }
        if (hits != 1) return false;
    }
    return true;
}

void criterion6() {
    std::ostringstream d;
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> z;
    std::size_t vertex_bad = 0, dd_bad = 0, h_bad = 0, order_bad = 0, order_checks = 0, endpoint_bad = 0;
    int counts[4] = {0, 0, 0, 0};
    for (int t = 0; t < 200; ++t) {
        const int dc = 1 + t % 3;
        ++counts[dc];
        const auto rates = random_rates(dc, rng);
        const CostMatrix costs = normalize_costs(CostMatrix(dc, rates));
        const std::vector<double> used(costs.rates().begin(), costs.rates().end());
        const auto s = build_polar_section(costs);
        if (!same_vertex_set(s, oracle::section_vertices(dc, used), 1)) ++vertex_bad;
        for (std::size_t k = 0; k < s.n_vertices(); ++k) {
            const auto v = s.vertex(k);
            int tight = 0;
            bool inside = v[0] == 1.0;
            for (const auto& h : s.constraints()) {
                const double slack = v[static_cast<std::size_t>(h.i)] * h.factor - v[static_cast<std::size_t>(h.j)];
                inside = inside && slack >= -1e-12;
                tight += std::abs(slack) < 1e-10;
            }
            if (!inside || tight < dc) ++h_bad;
        }
        if (dc >= 2) {
            std::vector<std::vector<double>> exact;
            for (std::size_t k = 0; k < s.n_vertices(); ++k) {
                const auto v = s.vertex(k);
                exact.emplace_back(v.begin(), v.end());
            }
            if (!same_vertex_set(build_polar_section(costs, VertexMethod::double_description), exact, 0)) ++dd_bad;
        } else {
            const double lo = 1.0 / (1.0 + costs(1, 0));
            const double hi = 1.0 + costs(0, 1);
            if (std::abs(s.min_component(0) - lo) > 1e-12 || std::abs(s.max_component(0) - hi) > 1e-12) ++endpoint_bad;
        }
        for (int q = 0; q < 20; ++q) {
            std::vector<double> x(static_cast<std::size_t>(dc + 1)), y(x.size()), diff(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = z(rng);
                y[i] = z(rng);
                diff[i] = x[i] - y[i];
            }
            ++order_checks;
            if (cone_geq(x, y, s) != (liquidation_value(diff, s) >= 0.0)) ++order_bad;
        }
    }
    d << "  200 random cost matrices (dc=1: " << counts[1] << ", dc=2: " << counts[2] << ", dc=3: " << counts[3] << ")\n"
      << "  vertex sets differing from the brute-force enumeration: " << vertex_bad << '\n'
      << "  vertices outside the H-representation or with < dc tight constraints: " << h_bad << '\n'
      << "  double description disagreeing with exact enumeration: " << dd_bad << '\n'
      << "  dc=1 bid/ask endpoints off by > 1e-12: " << endpoint_bad << '\n'
      << "  cone order vs liquidation value: " << order_bad << " mismatches in " << order_checks << '\n';
    verdict(6, vertex_bad == 0 && h_bad == 0 && dd_bad == 0 && endpoint_bad == 0 && order_bad == 0, "cone suite", d);
}

void criterion7(const Case& e2) {
    std::ostringstream d;
    std::mt19937_64 rng(7777);
    const double top = 4.0 * std::max(e2.report.delta_hat[0], 0.25);
    std::uniform_real_distribution<double> u(e2.grid->tails[0].slope, top);
    const auto sc0 = e2.inst.model.sc0();
    double worst = std::numeric_limits<double>::infinity();
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> a{u(rng)};
        const std::vector<double> b{u(rng)};
        const std::vector<double> m{0.5 * (a[0] + b[0])};
        const double fa = objective(a, *e2.grid, e2.batch, e2.inst.section, sc0);
        const double fb = objective(b, *e2.grid, e2.batch, e2.inst.section, sc0);
        const double fm = objective(m, *e2.grid, e2.batch, e2.inst.section, sc0);
        const double slack = 0.5 * (fa + fb) - fm;
        worst = std::min(worst, slack);
        bad += slack < -1e-12;
    }
    d << "  100 midpoint tests on E2 with common random numbers, delta in [" << e2.grid->tails[0].slope << ", " << top
      << "]\n"
      << "  worst slack " << worst << " (>= -1e-12), failures " << bad << '\n';
    verdict(7, bad == 0, "objective convexity under common random numbers", d);
}

void criterion8(const Case& e1, const Case& e2) {
    std::ostringstream d;
    bool ok = true;
    for (const Case* c : {&e1, &e2}) {
        const std::vector<double> x{c->report.price, 0.0};
        PricingInputs in{c->inst.section, c->batch, c->inst.model.sc0(), c->inst.grid_options()};
        const auto r = price_with_offset(c->inst.payoff, in, x, c->inst.numerics.price);
        const double tol = 3.0 * r.mc_stderr;
        const bool hit = std::abs(r.price) <= tol;
        ok = ok && hit;
        d << "  " << (c == &e1 ? "E1" : "E2") << ": endowment (" << x[0] << ", 0) leaves price " << r.price
          << ", |.| <= 3 stderr = " << tol << (hit ? "" : "  VIOLATED") << '\n';
    }
    verdict(8, ok, "endowment offset", d);
}

}  // namespace

int main() {
    std::cout.precision(10);
    std::cout << "hardware threads: " << std::thread::hardware_concurrency() << "\n";
    set_max_threads(1);
    const auto e1 = run_case("e1.json", false);
    criterion1(e1);
    set_max_threads(0);
    const auto e2 = run_case("e2.json", false);
    criterion2(e2);
    criterion3();
    criterion4(e1, e2);
    criterion5();
    criterion6();
    criterion7(e2);
    criterion8(e1, e2);
    std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << '\n';
    return failures == 0 ? 0 : 1;
}
