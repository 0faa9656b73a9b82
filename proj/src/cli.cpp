#include "bhsr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "bhsr/errors.hpp"
#include "bhsr/hedger.hpp"
#include "bhsr/hjb.hpp"
#include "bhsr/instance.hpp"
#include "bhsr/parallel.hpp"
#include "bhsr/pricer.hpp"
#include "json.hpp"

namespace bhsr {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Context {
    const Instance& inst;
    std::uint64_t seed;
    fs::path out;
    std::ostream& log;
    std::optional<double> tol_override;
};

json header(const Context& ctx) { return json{{"instance_hash", ctx.inst.hash}, {"seed", ctx.seed}}; }

void write_json(const Context& ctx, const std::string& name, const json& j) {
    std::ofstream f(ctx.out / name);
    if (!f) throw std::runtime_error("cannot write " + (ctx.out / name).string());
    f << j.dump(2) << '\n';
    ctx.log << "wrote " << (ctx.out / name).string() << '\n';
}

std::ofstream open_csv(const Context& ctx, const std::string& name) {
    std::ofstream f(ctx.out / name);
    if (!f) throw std::runtime_error("cannot write " + (ctx.out / name).string());
    f << "# instance_hash=" << ctx.inst.hash << " seed=" << ctx.seed << '\n';
    ctx.log << "wrote " << (ctx.out / name).string() << '\n';
    return f;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PathBatch make_batch(const Context& ctx, bool record) {
    const auto& n = ctx.inst.numerics;
    SimulateOptions so;
    so.n_recorded = record ? n.hedge_paths : 0;
    return simulate(ctx.inst.model, n.n_paths, n.n_steps, ctx.seed, so);
}

std::shared_ptr<TransformGrid> make_grid(const Context& ctx) {
    const auto& inst = ctx.inst;
    auto grid = std::make_shared<TransformGrid>(
        concave_envelope(inst.payoff, inst.section, build_transform_grid(inst.payoff, inst.section, inst.grid_options())));
    return grid;
}

void emit_envelope(const Context& ctx, const TransformGrid& grid) {
    grid.save(ctx.out / "transform_grid");
    ctx.log << "wrote " << (ctx.out / "transform_grid.json").string() << '\n';
    {
        auto f = open_csv(ctx, "vertices.csv");
        ctx.inst.section.write_csv(f);
    }
    json j = header(ctx);
    j["payoff"] = to_string(ctx.inst.payoff.kind);
    j["section_method"] = ctx.inst.section.method();
    j["n_vertices"] = ctx.inst.section.n_vertices();
    j["cost_adjustments"] = ctx.inst.cost_adjustments;
    j["sf_count"] = grid.sf_count();
    j["sc_count"] = grid.sc_count();
    json tails = json::array();
    for (const auto& t : grid.tails) tails.push_back({{"kind", t.kind == CostlyGrowth::bounded ? "bounded" : "linear"},
                                                      {"slope_units", t.slope}});
    j["costly_tails"] = tails;
    j["grid_bundle"] = "transform_grid.json";
    write_json(ctx, "envelope_report.json", j);
}

json price_json(const Context& ctx, const PriceReport& r, const PathBatch& batch) {
    json j = header(ctx);
    j["price"] = r.price;
    j["delta_hat_units"] = r.delta_hat;
    j["xi_hat"] = r.xi_hat;
    j["expectation_term"] = r.expectation_term;
    j["cost_term"] = r.cost_term;
    j["mc_stderr"] = r.mc_stderr;
    j["regime"] = r.regime;
    j["flat_minimum"] = r.flat;
    j["n_paths"] = r.n_paths;
    j["n_steps"] = batch.n_steps;
    j["scheme"] = to_string(batch.scheme);
    j["objective_evaluations"] = r.evaluations;
    if (r.offset) j["offset"] = *r.offset;
    const auto& inst = ctx.inst;
    if (inst.payoff.kind == PayoffKind::digital_barrier_call && inst.model.dc == 1 && inst.model.df == 1) {
        const auto foc = first_order_residual(r.delta_hat[0], inst.payoff, inst.model, inst.section, batch);
        j["first_order_residual"] = {{"closed_form", foc.closed_form}, {"mc", foc.mc}, {"mc_stderr", foc.mc_stderr}};
    }
    return j;
}

PriceReport do_price(const Context& ctx, const PathBatch& batch, TransformGrid* grid_out) {
    const auto& inst = ctx.inst;
    const auto t0 = std::chrono::steady_clock::now();
    PricingInputs in{inst.section, batch, inst.model.sc0(), inst.grid_options()};
    auto report = price(inst.payoff, in, inst.numerics.price, grid_out);
    ctx.log << "price " << std::setprecision(10) << report.price << " (" << report.regime << ") in "
            << std::setprecision(3) << seconds_since(t0) << " s\n";
    return report;
}

void emit_price(const Context& ctx, const PriceReport& report, const PathBatch& batch) {
    write_json(ctx, "price_report.json", price_json(ctx, report, batch));
    auto f = open_csv(ctx, "objective_curve.csv");
    write_curve_csv(report, f);
}

void do_hedge(const Context& ctx, const PriceReport& report, std::shared_ptr<const TransformGrid> grid,
              const PathBatch& batch) {
    const auto& inst = ctx.inst;
    const auto t0 = std::chrono::steady_clock::now();
    const auto schedule = build_schedule(report, grid, inst.model, batch.times, inst.numerics.lattice);
    auto opts = inst.numerics.dominance;
    if (ctx.tol_override) opts.tol_override = *ctx.tol_override;
    const auto dom = verify_dominance(schedule, batch, inst.payoff, inst.section, report.price, opts);
    ctx.log << "dominance violations " << dom.violations << "/" << dom.n_paths << " in " << std::setprecision(3)
            << seconds_since(t0) << " s\n";

    json j = header(ctx);
    j["price"] = dom.price;
    j["delta_hat_units"] = schedule.delta_hat;
    j["initial_cost"] = schedule.initial_cost;
    j["n_paths"] = dom.n_paths;
    j["n_steps"] = dom.n_steps;
    j["n_steps_coarse"] = dom.n_steps_coarse;
    j["tolerance"] = dom.tolerance;
    j["tol_constant"] = dom.tol_constant;
    j["tol_overridden"] = !std::isnan(opts.tol_override);
    j["rms_error_fine"] = dom.rms_error_fine;
    j["rms_error_coarse"] = dom.rms_error_coarse;
    j["error_order"] = dom.error_order;
    j["violations"] = dom.violations;
    j["violation_fraction"] = dom.violation_fraction;
    j["violation_fraction_coarse"] = dom.violation_fraction_coarse;
    j["worst_margin"] = dom.worst_margin;
    json probes = json::array();
    for (const auto& p : dom.probes)
        probes.push_back({{"eps", p.eps}, {"price", p.price}, {"violation_fraction", p.violation_fraction},
                          {"worst_margin", p.worst_margin}});
    j["probes"] = probes;
    j["self_financing_error"] = dom.self_financing_error;
    j["holdings_constant"] = dom.holdings_constant;
    j["admissibility_min"] = dom.admissibility_min;
    j["admissibility_violations"] = dom.admissibility_violations;
    json chains = json::array();
    for (const auto& c : dom.chains)
        chains.push_back({{"name", c.name}, {"paths", c.paths}, {"certified", c.certified}});
    j["chains"] = chains;
    j["chain_mismatches"] = dom.chain_mismatches;
    j["lattice_martingale_residual"] = schedule.martingale_residual;
    write_json(ctx, "dominance_report.json", j);
    auto f = open_csv(ctx, "margins.csv");
    write_margins_csv(dom, f);
}

void do_hjb(const Context& ctx, const PriceReport& report, const TransformGrid& grid) {
    const auto& inst = ctx.inst;
    const auto& n = inst.numerics;
    if (inst.model.df != 1 || inst.model.dc != 1)
        throw ValidationError("hjb: the control problem is solved for df = dc = 1 only");
    std::vector<double> kappas = n.kappa_list;
    std::sort(kappas.begin(), kappas.end());
    kappas.erase(std::unique(kappas.begin(), kappas.end()), kappas.end());
    const double kappa_max = kappas.empty() ? 0.0 : kappas.back();

    auto solve = [&](double kappa, int nx, int ny) {
        ControlProblem cp;
        cp.kappa = kappa;
        cp.mu_set = make_mu_set(kappa, kappas);
        cp.nodes_x = nx;
        cp.nodes_y = ny;
        cp.dt_kappa = kappa_max;
        cp.slices = n.hjb_slices;
        return solve_hjb(cp, grid, inst.model, inst.section);
    };

    json rows = json::array();
    auto gap_csv = open_csv(ctx, "hjb_gap.csv");
    gap_csv << "kappa,value,policy_mc,policy_mc_stderr,price,gap,gap_relative,t_steps,cfl_ratio,dt_refinements,"
               "monotone_controls,controls\n"
            << std::setprecision(17);
    double last_value = 0.0;
    double last_gap_rel = 0.0;
    for (std::size_t k = 0; k < kappas.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto vg = solve(kappas[k], n.hjb_nodes_x, n.hjb_nodes_y);
        const auto mc = control_mc_lower_bound(vg, grid, inst.model, n.hjb_mc_paths, n.hjb_mc_steps,
                                               stream_seed(ctx.seed, 1000 + k));
        const double gap = report.price - vg.root_value;
        last_value = vg.root_value;
        last_gap_rel = gap / report.price;
        ctx.log << "kappa " << kappas[k] << ": v = " << std::setprecision(8) << vg.root_value << " in "
                << std::setprecision(3) << seconds_since(t0) << " s\n";
        gap_csv << kappas[k] << ',' << vg.root_value << ',' << mc.mean << ',' << mc.std_error << ',' << report.price
                << ',' << gap << ',' << last_gap_rel << ',' << vg.t_steps << ',' << vg.cfl_ratio << ','
                << vg.dt_refinements << ',' << vg.monotone_controls << ',' << vg.controls.size() << '\n';
        rows.push_back({{"kappa", kappas[k]},
                        {"value", vg.root_value},
                        {"root_point", vg.root_point},
                        {"policy_mc", mc.mean},
                        {"policy_mc_stderr", mc.std_error},
                        {"gap", gap},
                        {"gap_relative", last_gap_rel},
                        {"t_steps", vg.t_steps},
                        {"cfl_ratio", vg.cfl_ratio},
                        {"dt_refinements", vg.dt_refinements},
                        {"monotone", vg.monotone},
                        {"monotone_controls", vg.monotone_controls},
                        {"controls", vg.controls.size()},
                        {"boundary", vg.boundary}});
        std::ostringstream tag;
        tag << kappas[k];
        {
            auto f = open_csv(ctx, "value_grid_kappa_" + tag.str() + "_t0.csv");
            write_value_csv(vg, 0, f);
        }
        if (k == 0) {
            auto f = open_csv(ctx, "value_grid_terminal.csv");
            write_value_csv(vg, vg.slices.size() - 1, f);
        }
    }
    json j = header(ctx);
    j["price"] = report.price;
    j["kappas"] = rows;
    const bool flagged = last_gap_rel > 0.15;
    j["gap_flagged"] = flagged;
    if (flagged) {
        const int nx = 2 * n.hjb_nodes_x - 1;
        const int ny = 2 * n.hjb_nodes_y - 1;
        ctx.log << "gap above 15%, refined rerun at " << nx << "x" << ny << '\n';
        const auto vg = solve(kappa_max, nx, ny);
        j["refined_rerun"] = {{"kappa", kappa_max}, {"nodes_x", nx}, {"nodes_y", ny}, {"value", vg.root_value},
                              {"coarse_value", last_value}, {"gap_relative", (report.price - vg.root_value) / report.price}};
    }
    write_json(ctx, "hjb_report.json", j);
}

}  // namespace

int run(const RunOptions& options, std::ostream& log, std::ostream& err) {
    try {
        set_max_threads(options.threads);
        const Instance inst = load_instance(options.instance);
        Context ctx{inst, options.seed.value_or(inst.numerics.seed), options.out_dir, log, options.tol_override};
        fs::create_directories(ctx.out);
        const auto& sub = options.subcommand;
        if (sub == "envelope") {
            emit_envelope(ctx, *make_grid(ctx));
        } else if (sub == "price") {
            const auto batch = make_batch(ctx, false);
            emit_price(ctx, do_price(ctx, batch, nullptr), batch);
        } else if (sub == "hedge") {
            const auto batch = make_batch(ctx, true);
            auto grid = std::make_shared<TransformGrid>();
            const auto report = do_price(ctx, batch, grid.get());
            do_hedge(ctx, report, grid, batch);
        } else if (sub == "hjb") {
            const auto batch = make_batch(ctx, false);
            TransformGrid grid;
            const auto report = do_price(ctx, batch, &grid);
            do_hjb(ctx, report, grid);
        } else if (sub == "all") {
            const auto batch = make_batch(ctx, true);
            save_batch(batch, ctx.out / "paths");
            auto grid = std::make_shared<TransformGrid>();
            const auto report = do_price(ctx, batch, grid.get());
            emit_envelope(ctx, *grid);
            emit_price(ctx, report, batch);
            do_hedge(ctx, report, grid, batch);
            if (inst.model.df == 1 && inst.model.dc == 1) do_hjb(ctx, report, *grid);
        } else {
            throw ValidationError("unknown subcommand '" + sub + "'");
        }
        return 0;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int run_main(int argc, char** argv) {
    CLI::App app{"Super-replication pricing and hedging under proportional transaction costs"};
    app.require_subcommand(1);
    RunOptions opts;
    std::string out;
    std::uint64_t seed = 0;
    double tol = 0.0;
    auto* seed_opt = app.add_option("--seed", seed, "Override the instance seed");
    app.add_option("--threads", opts.threads, "Worker thread cap (0 = hardware)");
    app.add_option("--out", out, "Output directory (default $BHSR_OUT_DIR or ./out)");
    auto* tol_opt = app.add_option("--tol-override", tol, "Absolute dominance tolerance (currency)");
    app.fallthrough();
    const std::pair<const char*, const char*> subs[] = {
        {"price", "Minimize the dual objective; price_report.json, objective_curve.csv"},
        {"hedge", "Price, then replay the hedge on recorded paths; dominance_report.json, margins.csv"},
        {"envelope", "Tabulate G and its envelope; vertices.csv, envelope_report.json"},
        {"hjb", "Restricted-control lower bounds per kappa; hjb_gap.csv, hjb_report.json"},
        {"all", "Everything above from one path batch"},
    };
    for (const auto& [name, help] : subs) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("instance", opts.instance, "Instance JSON file")->required()->check(CLI::ExistingFile);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    opts.subcommand = app.get_subcommands().front()->get_name();
    if (*seed_opt) opts.seed = seed;
    if (*tol_opt) opts.tol_override = tol;
    if (out.empty()) {
        const char* env = std::getenv("BHSR_OUT_DIR");
        out = env && *env ? env : "out";
    }
    opts.out_dir = out;
    return run(opts, std::cout, std::cerr);
}

}  // namespace bhsr
