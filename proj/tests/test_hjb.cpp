#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "bhsr/errors.hpp"
#include "bhsr/hjb.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bhsr;

namespace {

ControlProblem small_problem(double kappa) {
    ControlProblem p;
    p.kappa = kappa;
    p.nodes_x = 51;
    p.nodes_y = 41;
    p.slices = 16;
    return p;
}

struct Setup {
    fixture::Example ex;
    TransformGrid grid;
};

const Setup& e1() {
    static std::unique_ptr<Setup> s;
    if (!s) {
        s = std::make_unique<Setup>();
        s->ex = fixture::digital_example(100.0, 201, 121);
        s->grid = concave_envelope(s->ex.payoff, s->ex.section,
                                   build_transform_grid(s->ex.payoff, s->ex.section, s->ex.grid_options));
    }
    return *s;
}

double magnitude(const Control& m) { return std::hypot(m[0], m[1]); }

}  // namespace

TEST(MuSet, ContainsZeroBoundedAndNested) {
    const std::vector<double> list{0.0, 1.0, 2.0, 5.0};
    const auto small = make_mu_set(2.0, list);
    const auto large = make_mu_set(5.0, list);
    EXPECT_EQ(small[0], (Control{0.0, 0.0}));
    for (const auto& m : small) EXPECT_LE(magnitude(m), 2.0 + 1e-12);
    for (const auto& m : small) EXPECT_NE(std::find(large.begin(), large.end(), m), large.end());
    EXPECT_EQ(make_mu_set(0.0).size(), 1u);
}

TEST(SolveHjb, RejectsControlsBeyondKappaOrWithoutZero) {
    const auto& s = e1();
    auto p = small_problem(1.0);
    p.mu_set = {{0.0, 0.0}, {2.0, 0.0}};
    EXPECT_THROW(solve_hjb(p, s.grid, s.ex.model, s.ex.section), ValidationError);
    p.mu_set = {{0.5, 0.0}};
    EXPECT_THROW(solve_hjb(p, s.grid, s.ex.model, s.ex.section), ValidationError);
}

TEST(SolveHjb, WithoutControlIsTheFreeMarketPrice) {
    const auto s = build_polar_section(CostMatrix(1, {0.0, 0.1, 0.0, 0.0}));
    const auto p = make_catalog_payoff(PayoffKind::free_call, 1, 1, {{"strike", 100.0}}, s);
    auto e = fixture::digital_example(100.0, 201, 41);
    const auto g = concave_envelope(p, s, build_transform_grid(p, s, e.grid_options));
    const auto v = solve_hjb(small_problem(0.0), g, e.model, s);
    const double ref = oracle::bs_call(100.0, 100.0, 0.2, 1.0);
    EXPECT_NEAR(v.root_value, ref, 0.05);
    const PolicyFunction zero = [](double, double, double) { return Control{0.0, 0.0}; };
    const auto mc = control_mc_lower_bound(v, g, e.model, zero, 20000, 16, 5);
    EXPECT_NEAR(mc.mean, ref, 4.0 * mc.std_error);
}

TEST(SolveHjb, TerminalSliceIsTheEnvelope) {
    const auto& s = e1();
    const auto v = solve_hjb(small_problem(1.0), s.grid, s.ex.model, s.ex.section);
    const auto& term = v.terminal();
    const std::size_t ny = v.y_axis.size();
    std::vector<double> sf(1), sc(1);
    for (std::size_t i = 0; i < v.x_axis.size(); i += 7)
        for (std::size_t j = 0; j < ny; j += 5) {
            sf[0] = std::exp(v.x_axis[i]);
            sc[0] = std::exp(v.y_axis[j]);
            EXPECT_DOUBLE_EQ(term[i * ny + j], s.grid.ghat_at(sf, sc));
        }
    EXPECT_LE(v.cfl_ratio, 0.9);
    EXPECT_GT(v.dt_refinements, 0);
    EXPECT_EQ(v.slices.size(), 17u);
}

TEST(SolveHjb, CaseOneValuesIncreaseInKappaAndStayBelowThePrice) {
    const auto& s = e1();
    const std::vector<double> kappas{0.0, 1.0, 2.0, 5.0};
    const double ref = oracle::bs_call(100.0, 100.0, 0.2, 1.0);
    double prev = -1.0;
    for (double k : kappas) {
        auto p = small_problem(k);
        p.nodes_x = 101;
        p.nodes_y = 101;
        p.mu_set = make_mu_set(k, kappas);
        p.dt_kappa = 5.0;
        const auto v = solve_hjb(p, s.grid, s.ex.model, s.ex.section);
        EXPECT_GE(v.root_value, prev - 1e-12) << "kappa " << k;
        EXPECT_LE(v.root_value, ref + 0.05) << "kappa " << k;
        prev = v.root_value;
    }
}

TEST(ControlMc, PolicyBeyondKappaRejected) {
    const auto& s = e1();
    const auto v = solve_hjb(small_problem(1.0), s.grid, s.ex.model, s.ex.section);
    const PolicyFunction big = [](double, double, double) { return Control{3.0, 0.0}; };
    EXPECT_THROW(control_mc_lower_bound(v, s.grid, s.ex.model, big, 100, 4, 1), ValidationError);
}

TEST(ControlMc, ArgmaxPolicyIsBelowTheGridValue) {
    const auto& s = e1();
    const auto v = solve_hjb(small_problem(2.0), s.grid, s.ex.model, s.ex.section);
    const auto mc = control_mc_lower_bound(v, s.grid, s.ex.model, 20000, 32, 9);
    EXPECT_LE(mc.mean, v.root_value + 0.05 + 3.0 * mc.std_error);
    EXPECT_LE(mc.mean, oracle::bs_call(100.0, 100.0, 0.2, 1.0) + 3.0 * mc.std_error);
}

TEST(DpConsistency, UncontrolledStepNeverGains) {
    const auto& s = e1();
    const auto v = solve_hjb(small_problem(1.0), s.grid, s.ex.model, s.ex.section);
    const auto d = dp_consistency(v, s.ex.model, 8, 2000, 3);
    EXPECT_GT(d.nodes, 0u);
    EXPECT_GE(static_cast<double>(d.passed), 0.95 * static_cast<double>(d.nodes));
}

TEST(ValueCsv, OneRowPerNode) {
    const auto& s = e1();
    const auto v = solve_hjb(small_problem(0.0), s.grid, s.ex.model, s.ex.section);
    std::ostringstream out;
    write_value_csv(v, 0, out);
    std::size_t lines = 0;
    for (char c : out.str()) lines += c == '\n';
    EXPECT_EQ(lines, v.x_axis.size() * v.y_axis.size() + 1);
}

TEST(SolveHjb, RequiresTwoDimensions) {
    const auto s = build_polar_section(CostMatrix::uniform(2, 0.1));
    const auto p = make_catalog_payoff(PayoffKind::zero, 1, 2, {}, s);
    TransformGridOptions o;
    o.sf_lo = {50.0};
    o.sf_hi = {150.0};
    o.sf_nodes = 3;
    o.sc_reference = {100.0, 100.0};
    o.sc_nodes = 5;
    const auto g = concave_envelope(p, s, build_transform_grid(p, s, o));
    MarketModel m;
    m.df = 1;
    m.dc = 2;
    m.s0 = {100.0, 100.0, 100.0};
    m.sigma = Eigen::MatrixXd::Identity(3, 3) * 0.2;
    EXPECT_THROW(solve_hjb(small_problem(1.0), g, m, s), ValidationError);
}
