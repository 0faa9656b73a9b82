#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "bhsr/errors.hpp"
#include "bhsr/payoff.hpp"

namespace bhsr {

namespace {

struct KindName {
    PayoffKind kind;
    const char* name;
};

constexpr std::array<KindName, 8> kKindNames{{
    {PayoffKind::zero, "zero"},
    {PayoffKind::digital_barrier_call, "digital-barrier-call"},
    {PayoffKind::free_call, "free-call"},
    {PayoffKind::costly_call_cash, "costly-call-cash"},
    {PayoffKind::costly_capped_call, "costly-capped-call"},
    {PayoffKind::costly_physical_call, "costly-physical-call"},
    {PayoffKind::basket_call, "basket-call"},
    {PayoffKind::tabulated, "tabulated"},
}};

double require(const std::map<std::string, double>& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw ValidationError("PayoffSpec: missing parameter '" + key + "'");
    if (!std::isfinite(it->second)) throw ValidationError("PayoffSpec: parameter '" + key + "' is not finite");
    return it->second;
}

double positive(const std::map<std::string, double>& params, const std::string& key) {
    const double v = require(params, key);
    if (!(v > 0.0)) throw ValidationError("PayoffSpec: parameter '" + key + "' must be > 0");
    return v;
}

double pos(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

std::string to_string(PayoffKind k) {
    for (const auto& kn : kKindNames)
        if (kn.kind == k) return kn.name;
    return "unknown";
}

PayoffKind payoff_kind_from_string(const std::string& id) {
    for (const auto& kn : kKindNames)
        if (id == kn.name) return kn.kind;
    throw ValidationError("PayoffSpec: unknown catalog id '" + id + "'");
}

void PayoffSpec::evaluate(std::span<const double> s, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto sf0 = s[0];
    const auto sca = s[static_cast<std::size_t>(df + catalog.asset)];
    switch (kind) {
        case PayoffKind::zero:
            break;
        case PayoffKind::digital_barrier_call:
            out[0] = sca > catalog.barrier ? pos(sf0 - catalog.strike) : 0.0;
            break;
        case PayoffKind::free_call:
            out[0] = pos(sf0 - catalog.strike);
            break;
        case PayoffKind::costly_call_cash:
            out[0] = pos(sca - catalog.strike);
            break;
        case PayoffKind::costly_capped_call:
            out[0] = std::min(pos(sca - catalog.strike), catalog.cap);
            break;
        case PayoffKind::costly_physical_call:
            if (sca > catalog.strike) {
                out[0] = -catalog.strike;
                out[static_cast<std::size_t>(1 + catalog.asset)] = sca;
            }
            break;
        case PayoffKind::basket_call:
            out[0] = pos(sf0 + sca - catalog.strike);
            break;
        case PayoffKind::tabulated:
            table->evaluate(s, dc, out);
            break;
    }
    if (offset) {
        out[0] -= offset->x[0];
        for (int i = 0; i < dc; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            out[ui + 1] -= s[static_cast<std::size_t>(df + i)] / offset->sc0[ui] * offset->x[ui + 1];
        }
    }
}

std::vector<double> PayoffSpec::operator()(std::span<const double> s) const {
    std::vector<double> out(static_cast<std::size_t>(1 + dc));
    evaluate(s, out);
    return out;
}

PayoffSpec make_catalog_payoff(PayoffKind kind, int df, int dc, const std::map<std::string, double>& params,
                               const PolarSection& section) {
    if (df < 1 || dc < 1) throw ValidationError("PayoffSpec: df and dc must be >= 1");
    if (section.dc() != dc) throw ValidationError("PayoffSpec: section dimension does not match dc");
    if (kind == PayoffKind::tabulated) throw ValidationError("PayoffSpec: use make_tabulated_payoff");
    PayoffSpec p;
    p.df = df;
    p.dc = dc;
    p.kind = kind;
    p.params = params;
    p.growth.delta_f.assign(static_cast<std::size_t>(df), 0.0);
    p.zc_growth.assign(static_cast<std::size_t>(dc), CostlyTail{});
    p.sf_kinks.assign(static_cast<std::size_t>(df), {});
    p.sc_kinks.assign(static_cast<std::size_t>(dc), {});

    if (auto it = params.find("asset"); it != params.end()) {
        const double a = it->second;
        if (a < 0 || a >= dc || a != std::floor(a)) throw ValidationError("PayoffSpec: 'asset' out of range");
        p.catalog.asset = static_cast<int>(a);
    }
    const auto a = static_cast<std::size_t>(p.catalog.asset);
    // Worst-case rescaling divides s^c_a by xi_a, so a claim growing with unit
    // slope in s^c_a has G-slope 1 / min xi_a.
    const double cash_slope = 1.0 / section.min_component(p.catalog.asset);

    switch (kind) {
        case PayoffKind::zero:
            break;
        case PayoffKind::digital_barrier_call:
            p.catalog.strike = positive(params, "strike_free");
            p.catalog.barrier = positive(params, "barrier_costly");
            p.sf_kinks[0] = {p.catalog.strike};
            p.sc_kinks[a] = {p.catalog.barrier};
            break;
        case PayoffKind::free_call:
            p.catalog.strike = positive(params, "strike");
            p.sf_kinks[0] = {p.catalog.strike};
            break;
        case PayoffKind::costly_call_cash:
            p.catalog.strike = positive(params, "strike");
            p.sc_kinks[a] = {p.catalog.strike};
            p.zc_growth[a] = {CostlyGrowth::linear, cash_slope};
            break;
        case PayoffKind::costly_capped_call:
            p.catalog.strike = positive(params, "strike");
            p.catalog.cap = positive(params, "cap");
            p.sc_kinks[a] = {p.catalog.strike, p.catalog.strike + p.catalog.cap};
            break;
        case PayoffKind::costly_physical_call:
            p.catalog.strike = positive(params, "strike");
            p.sc_kinks[a] = {p.catalog.strike};
            p.zc_growth[a] = {CostlyGrowth::linear, 1.0};
            p.growth.c = p.catalog.strike;
            break;
        case PayoffKind::basket_call:
            p.catalog.strike = positive(params, "strike");
            p.zc_growth[a] = {CostlyGrowth::linear, cash_slope};
            break;
        case PayoffKind::tabulated:
            break;
    }
    return p;
}

PayoffSpec make_tabulated_payoff(int df, int dc, std::shared_ptr<const TabulatedPayoff> table,
                                 AdmissibilityBound growth, std::vector<CostlyTail> tails) {
    if (!table) throw ValidationError("PayoffSpec: tabulated payoff needs a table");
    if (static_cast<int>(table->axes.size()) != df + dc) throw ValidationError("PayoffSpec: table dimension mismatch");
    if (static_cast<int>(tails.size()) != dc) throw ValidationError("PayoffSpec: need one growth flag per costly asset");
    if (static_cast<int>(growth.delta_f.size()) != df) growth.delta_f.assign(static_cast<std::size_t>(df), 0.0);
    PayoffSpec p;
    p.df = df;
    p.dc = dc;
    p.kind = PayoffKind::tabulated;
    p.table = std::move(table);
    p.growth = std::move(growth);
    p.zc_growth = std::move(tails);
    p.sf_kinks.assign(static_cast<std::size_t>(df), {});
    p.sc_kinks.assign(static_cast<std::size_t>(dc), {});
    for (int i = 0; i < df; ++i) p.sf_kinks[static_cast<std::size_t>(i)] = p.table->axes[static_cast<std::size_t>(i)];
    for (int i = 0; i < dc; ++i) p.sc_kinks[static_cast<std::size_t>(i)] = p.table->axes[static_cast<std::size_t>(df + i)];
    return p;
}

PayoffSpec with_offset(const PayoffSpec& payoff, std::span<const double> x, std::span<const double> sc0) {
    if (static_cast<int>(x.size()) != 1 + payoff.dc || static_cast<int>(sc0.size()) != payoff.dc) {
        throw ValidationError("offset: x must have 1+dc entries and sc0 dc entries");
    }
    PayoffSpec p = payoff;
    PayoffOffset off{std::vector<double>(x.begin(), x.end()), std::vector<double>(sc0.begin(), sc0.end())};
    if (payoff.offset) {
        // Offsets compose additively in x (same sc0 normalization required).
        for (std::size_t k = 0; k < off.x.size(); ++k) off.x[k] += payoff.offset->x[k];
    }
    double extra_delta = 0.0;
    for (int i = 0; i < payoff.dc; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (!(sc0[ui] > 0.0)) throw ValidationError("offset: sc0 must be positive");
        // The offset enters G as -x_c,i z_i / sc0_i, independent of xi.
        p.zc_growth[ui].slope -= x[ui + 1] / sc0[ui];
        extra_delta = std::max(extra_delta, x[ui + 1] / sc0[ui]);
    }
    p.growth.c += std::max(x[0], 0.0);
    p.growth.delta += extra_delta;
    p.offset = std::move(off);
    return p;
}

void check_admissibility(const PayoffSpec& payoff, const PolarSection& section, std::span<const double> s_ref,
                         int points_per_dim) {
    const int d = payoff.d();
    if (static_cast<int>(s_ref.size()) != d) throw ValidationError("admissibility check: reference point dimension");
    int n = points_per_dim;
    while (n > 2 && std::pow(static_cast<double>(n + 1), d) > 4096.0) --n;
    // Axis samples: 0 and n log-spaced points over s_ref * [e^-3, e^3].
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        auto& ax = axes[static_cast<std::size_t>(i)];
        ax.push_back(0.0);
        for (int k = 0; k < n; ++k) {
            const double u = n == 1 ? 0.0 : -3.0 + 6.0 * k / (n - 1);
            ax.push_back(s_ref[static_cast<std::size_t>(i)] * std::exp(u));
        }
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> s(static_cast<std::size_t>(d));
    std::vector<double> g(static_cast<std::size_t>(1 + payoff.dc));
    while (true) {
        for (int i = 0; i < d; ++i) s[static_cast<std::size_t>(i)] = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        payoff.evaluate(s, g);
        double lower0 = payoff.growth.c;
        for (int i = 0; i < payoff.df; ++i) lower0 += payoff.growth.delta_f[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
        g[0] += lower0;
        double scale = 1.0 + std::abs(lower0);
        for (int i = 0; i < payoff.dc; ++i) {
            const double sc = s[static_cast<std::size_t>(payoff.df + i)];
            g[static_cast<std::size_t>(1 + i)] += payoff.growth.delta * sc;
            scale += std::abs(payoff.growth.delta * sc);
        }
        if (liquidation_value(g, section) < -1e-9 * scale) {
            std::ostringstream msg;
            msg << "PayoffSpec invariant violated (admissibility bound): g(s) is not above "
                   "-(c + delta_f.s^f, delta s^c) at s = (";
            for (int i = 0; i < d; ++i) msg << (i ? ", " : "") << s[static_cast<std::size_t>(i)];
            msg << ")";
            throw ValidationError(msg.str());
        }
        int k = 0;
        while (k < d && ++idx[static_cast<std::size_t>(k)] == axes[static_cast<std::size_t>(k)].size()) idx[static_cast<std::size_t>(k++)] = 0;
        if (k == d) break;
    }
}

}  // namespace bhsr
