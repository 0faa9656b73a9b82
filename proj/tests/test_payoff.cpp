#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bhsr/errors.hpp"
#include "bhsr/payoff.hpp"
#include "fixtures.hpp"

using namespace bhsr;

namespace {

PolarSection interval(double l01, double l10) { return build_polar_section(CostMatrix(1, {0.0, l01, l10, 0.0})); }

std::filesystem::path write_table(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << body;
    return path;
}

}  // namespace

TEST(Catalog, DigitalBarrierCall) {
    const auto e = fixture::digital_example(100.0);
    const std::vector<double> in{120.0, 101.0};
    const std::vector<double> out_barrier{120.0, 100.0};
    EXPECT_EQ(e.payoff(in), (std::vector<double>{20.0, 0.0}));
    EXPECT_EQ(e.payoff(out_barrier), (std::vector<double>{0.0, 0.0}));
}

TEST(Catalog, PhysicalCallDeliversTheAsset) {
    const auto s = interval(0.1, 0.0);
    const auto p = make_catalog_payoff(PayoffKind::costly_physical_call, 1, 1, {{"strike", 50.0}}, s);
    const std::vector<double> itm{1.0, 60.0};
    EXPECT_EQ(p(itm), (std::vector<double>{-50.0, 60.0}));
}

TEST(Catalog, NamesRoundTripAndUnknownRejected) {
    for (auto k : {PayoffKind::zero, PayoffKind::digital_barrier_call, PayoffKind::free_call, PayoffKind::costly_call_cash,
                   PayoffKind::costly_capped_call, PayoffKind::costly_physical_call, PayoffKind::basket_call,
                   PayoffKind::tabulated})
        EXPECT_EQ(payoff_kind_from_string(to_string(k)), k);
    EXPECT_THROW(payoff_kind_from_string("asian"), ValidationError);
}

TEST(Catalog, MissingParameterRejected) {
    const auto s = interval(0.1, 0.0);
    EXPECT_THROW(make_catalog_payoff(PayoffKind::free_call, 1, 1, {}, s), ValidationError);
    EXPECT_THROW(make_catalog_payoff(PayoffKind::free_call, 1, 1, {{"strike", -1.0}}, s), ValidationError);
}

TEST(Tabulated, LoadsShuffledGridAndInterpolates) {
    const auto path = write_table("bhsr_table_ok.csv",
                                  "sf1,sc1,g1,g2\n"
                                  "2,0,2,0\n"
                                  "0,0,0,0\n"
                                  "0,4,0,4\n"
                                  "2,4,2,4\n");
    const auto t = load_tabulated_csv(path, 1, 1);
    std::vector<double> out(2);
    const std::vector<double> mid{1.0, 1.0};
    t.evaluate(mid, 1, out);
    EXPECT_DOUBLE_EQ(out[0], 1.0);
    EXPECT_DOUBLE_EQ(out[1], 1.0);
    const std::vector<double> beyond{10.0, 10.0};
    t.evaluate(beyond, 1, out);
    EXPECT_DOUBLE_EQ(out[0], 2.0);
    EXPECT_DOUBLE_EQ(out[1], 4.0);
}

TEST(Tabulated, RejectsHolesAndBadNumbers) {
    EXPECT_THROW(load_tabulated_csv(write_table("bhsr_table_hole.csv", "sf1,sc1,g1,g2\n0,0,0,0\n1,1,1,1\n"), 1, 1),
                 ValidationError);
    EXPECT_THROW(load_tabulated_csv(write_table("bhsr_table_nan.csv", "sf1,sc1,g1,g2\n0,x,0,0\n"), 1, 1),
                 ValidationError);
    EXPECT_THROW(load_tabulated_csv("/nonexistent/table.csv", 1, 1), ValidationError);
}

TEST(Admissibility, FailingCertificateRejected) {
    const auto path = write_table("bhsr_table_neg.csv",
                                  "sf1,sc1,g1,g2\n0,0,-5,0\n1,0,-5,0\n0,1,-5,0\n1,1,-5,0\n");
    auto table = std::make_shared<const TabulatedPayoff>(load_tabulated_csv(path, 1, 1));
    const auto s = interval(0.1, 0.0);
    const std::vector<double> ref{1.0, 1.0};
    const auto bad = make_tabulated_payoff(1, 1, table, {1.0, {0.0}, 0.0}, {{CostlyGrowth::bounded, 0.0}});
    EXPECT_THROW(check_admissibility(bad, s, ref), ValidationError);
    const auto good = make_tabulated_payoff(1, 1, table, {5.0, {0.0}, 0.0}, {{CostlyGrowth::bounded, 0.0}});
    EXPECT_NO_THROW(check_admissibility(good, s, ref));
}

TEST(Offset, SubtractsCashAndScaledCostlyPosition) {
    const auto e = fixture::digital_example(10.0);
    const std::vector<double> x{1.0, 2.0};
    const std::vector<double> sc0{10.0};
    const auto p = with_offset(e.payoff, x, sc0);
    const std::vector<double> s{120.0, 150.0};
    const auto g = p(s);
    EXPECT_DOUBLE_EQ(g[0], 20.0 - 1.0);
    EXPECT_DOUBLE_EQ(g[1], -2.0 * 150.0 / 10.0);
}

// G(z) = sup over xi in [a, b] of xi . g(z^f, z^c / xi).
TEST(TransformG, ClosedFormsOnTheInterval) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    std::uniform_real_distribution<double> price(1.0, 200.0);
    for (int trial = 0; trial < 30; ++trial) {
        const double l01 = u(rng) + 0.01;
        const double l10 = u(rng);
        const double a = 1.0 / (1.0 + l10);
        const auto s = interval(l01, l10);
        const double k = price(rng);
        const auto digital = make_catalog_payoff(PayoffKind::digital_barrier_call, 1, 1,
                                                 {{"strike_free", k}, {"barrier_costly", k}}, s);
        const auto cash = make_catalog_payoff(PayoffKind::costly_call_cash, 1, 1, {{"strike", k}}, s);
        const auto physical = make_catalog_payoff(PayoffKind::costly_physical_call, 1, 1, {{"strike", k}}, s);
        for (int j = 0; j < 10; ++j) {
            const std::vector<double> z{price(rng), price(rng)};
            EXPECT_NEAR(transform_G(digital, s, z), z[1] > k * a ? std::max(z[0] - k, 0.0) : 0.0, 1e-12);
            EXPECT_NEAR(transform_G(cash, s, z), std::max(z[1] / a - k, 0.0), 1e-9);
            EXPECT_NEAR(transform_G(physical, s, z), std::max(z[1] - k, 0.0), 1e-9);
        }
    }
}

TEST(TransformG, NondecreasingInRefinementLevel) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 0.2);
    std::uniform_real_distribution<double> price(50.0, 150.0);
    std::vector<double> rates(9, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) rates[static_cast<std::size_t>(3 * i + j)] = u(rng);
    const auto s = build_polar_section(CostMatrix(2, rates));
    const auto p = make_catalog_payoff(PayoffKind::costly_capped_call, 1, 2, {{"strike", 100.0}, {"cap", 20.0}}, s);
    for (int j = 0; j < 10; ++j) {
        const std::vector<double> z{price(rng), price(rng), price(rng)};
        const double g0 = transform_G(p, s, z, 0);
        const double g1 = transform_G(p, s, z, 1);
        EXPECT_GE(g1, g0);
    }
}
