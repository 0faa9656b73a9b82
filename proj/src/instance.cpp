#include "bhsr/instance.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bhsr/errors.hpp"
#include "bhsr/numeric.hpp"
#include "json.hpp"

namespace bhsr {

namespace {

using nlohmann::json;

// Object reader that rejects keys nobody asked about.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError("instance: '" + path_ + "' must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ValidationError("instance: missing key '" + path_ + "." + key + "'");
        return j_.at(key);
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    template <class T>
    T value(const std::string& key) {
        return convert<T>(at(key), key);
    }

    template <class T>
    T value_or(const std::string& key, T fallback) {
        const json* v = get(key);
        return v ? convert<T>(*v, key) : fallback;
    }

    std::string name(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ValidationError("instance: unknown key '" + path_ + "." + k + "'");
    }

private:
    template <class T>
    T convert(const json& v, const std::string& key) const {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ValidationError("instance: key '" + path_ + "." + key + "' has the wrong type");
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> flat_matrix(const json& j, std::size_t n, const std::string& name) {
    if (!j.is_array() || j.size() != n) throw ValidationError("instance: '" + name + "' must be " + std::to_string(n) + " rows");
    std::vector<double> out;
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != n)
            throw ValidationError("instance: '" + name + "' must be " + std::to_string(n) + "x" + std::to_string(n));
        for (const auto& v : row) {
            if (!v.is_number()) throw ValidationError("instance: '" + name + "' entries must be numbers");
            out.push_back(v.get<double>());
        }
    }
    return out;
}

MarketModel read_model(Section s) {
    MarketModel m;
    m.df = s.value<int>("df");
    m.dc = s.value<int>("dc");
    if (m.df < 1 || m.dc < 1 || m.dc > kMaxCostlyAssets)
        throw ValidationError("instance: need df >= 1 and 1 <= dc <= 8");
    m.s0 = s.value<std::vector<double>>("s0_currency");
    m.horizon_years = s.value<double>("horizon_years");
    const auto d = static_cast<std::size_t>(m.d());
    const auto vol = flat_matrix(s.at("vol_per_sqrt_year"), d, s.name("vol_per_sqrt_year"));
    m.sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        vol.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    m.block_certificate = s.value_or<bool>("free_rows_depend_on_free_prices", true);
    s.finish();
    validate_model(m);
    return m;
}

const std::map<std::string, std::string> kParamNames{
    {"strike_free_currency", "strike_free"},
    {"barrier_costly_currency", "barrier_costly"},
    {"strike_currency", "strike"},
    {"cap_currency", "cap"},
    {"asset_index", "asset"},
};

PayoffSpec read_payoff(Section s, const MarketModel& model, const PolarSection& section,
                       const std::filesystem::path& base_dir, std::string& table_bytes) {
    const auto id = s.value<std::string>("catalog_id");
    const PayoffKind kind = payoff_kind_from_string(id);
    PayoffSpec p;
    if (kind != PayoffKind::tabulated) {
        std::map<std::string, double> params;
        if (const json* pj = s.get("params")) {
            Section ps(*pj, s.name("params"));
            for (const auto& [key, internal] : kParamNames)
                if (ps.has(key)) params[internal] = ps.value<double>(key);
            ps.finish();
        }
        p = make_catalog_payoff(kind, model.df, model.dc, params, section);
    } else {
        const auto file = base_dir / s.value<std::string>("tabulated_csv");
        {
            std::ifstream in(file, std::ios::binary);
            if (!in) throw ValidationError("instance: cannot read payoff table " + file.string());
            std::ostringstream buf;
            buf << in.rdbuf();
            table_bytes = buf.str();
        }
        auto table = std::make_shared<const TabulatedPayoff>(load_tabulated_csv(file, model.df, model.dc));
        Section g(s.at("growth"), s.name("growth"));
        AdmissibilityBound bound;
        bound.c = g.value<double>("c_currency");
        bound.delta_f = g.value<std::vector<double>>("delta_free_units");
        bound.delta = g.value<double>("delta_costly_units");
        g.finish();
        if (static_cast<int>(bound.delta_f.size()) != model.df)
            throw ValidationError("instance: payoff.growth.delta_free_units needs df entries");
        std::vector<CostlyTail> tails;
        const json& tj = s.at("costly_tails");
        if (!tj.is_array() || static_cast<int>(tj.size()) != model.dc)
            throw ValidationError("instance: payoff.costly_tails needs dc entries");
        for (const auto& t : tj) {
            Section ts(t, s.name("costly_tails[]"));
            CostlyTail tail;
            const auto k = ts.value<std::string>("kind");
            if (k == "bounded") tail.kind = CostlyGrowth::bounded;
            else if (k == "linear") tail.kind = CostlyGrowth::linear;
            else if (k == "superlinear") tail.kind = CostlyGrowth::superlinear;
            else throw ValidationError("instance: costly tail kind must be bounded, linear or superlinear");
            tail.slope = ts.value_or<double>("slope_units", 0.0);
            ts.finish();
            tails.push_back(tail);
        }
        p = make_tabulated_payoff(model.df, model.dc, std::move(table), bound, tails);
    }
    s.finish();
    return p;
}

Numerics read_numerics(Section s, const MarketModel& model) {
    Numerics n;
    n.n_paths = s.value_or<std::size_t>("n_paths", n.n_paths);
    n.hedge_paths = s.value_or<std::size_t>("hedge_paths", n.hedge_paths);
    n.n_steps = s.value_or<std::size_t>("n_steps", n.n_steps);
    n.seed = s.value_or<std::uint64_t>("seed", n.seed);
    n.sf_nodes = s.value_or<int>("sf_nodes", n.sf_nodes);
    n.sf_width_sd = s.value_or<double>("sf_width_sd", n.sf_width_sd);
    n.sc_nodes = s.value_or<int>("sc_nodes", n.sc_nodes);
    n.sc_span = s.value_or<double>("sc_span", n.sc_span);
    n.sc_reference = s.value_or<std::vector<double>>("sc_reference_currency", model.sc0());
    n.lambda_level = s.value_or<int>("lambda_level", n.lambda_level);
    n.price.rel_tol = s.value_or<double>("price_rel_tol", n.price.rel_tol);
    n.price.delta_tol = s.value_or<double>("delta_tol_units", n.price.delta_tol);
    n.price.curve_points = s.value_or<int>("curve_points", n.price.curve_points);
    n.lattice.nodes_1d = s.value_or<int>("lattice_nodes_1d", n.lattice.nodes_1d);
    n.lattice.nodes_2d = s.value_or<int>("lattice_nodes_2d", n.lattice.nodes_2d);
    n.dominance.z = s.value_or<double>("dominance_quantile_z", n.dominance.z);
    if (const json* t = s.get("tol_override_currency"); t && !t->is_null())
        n.dominance.tol_override = t->get<double>();
    n.dominance.probe_eps = s.value_or<std::vector<double>>("probe_eps", n.dominance.probe_eps);
    n.kappa_list = s.value_or<std::vector<double>>("kappa_list", n.kappa_list);
    n.hjb_nodes_x = s.value_or<int>("hjb_nodes_x", n.hjb_nodes_x);
    n.hjb_nodes_y = s.value_or<int>("hjb_nodes_y", n.hjb_nodes_y);
    n.hjb_slices = s.value_or<int>("hjb_slices", n.hjb_slices);
    n.hjb_mc_paths = s.value_or<std::size_t>("hjb_mc_paths", n.hjb_mc_paths);
    n.hjb_mc_steps = s.value_or<std::size_t>("hjb_mc_steps", n.hjb_mc_steps);
    n.max_condition_number = s.value_or<double>("max_condition_number", n.max_condition_number);
    s.finish();
    if (n.n_paths < 2 || n.n_steps < 2) throw ValidationError("instance: need n_paths >= 2 and n_steps >= 2");
    if (n.hedge_paths > n.n_paths) n.n_paths = n.hedge_paths;
    if (static_cast<int>(n.sc_reference.size()) != model.dc)
        throw ValidationError("instance: numerics.sc_reference_currency needs dc entries");
    for (double k : n.kappa_list)
        if (!(k >= 0.0)) throw ValidationError("instance: kappa_list entries must be >= 0");
    return n;
}

}  // namespace

TransformGridOptions Instance::grid_options() const {
    TransformGridOptions o;
    const double t = model.horizon_years;
    for (int i = 0; i < model.df; ++i) {
        double var = 0.0;
        for (int j = 0; j < model.d(); ++j) var += model.sigma(i, j) * model.sigma(i, j);
        const double w = numerics.sf_width_sd * std::sqrt(var * t);
        o.sf_lo.push_back(model.s0[static_cast<std::size_t>(i)] * std::exp(-w));
        o.sf_hi.push_back(model.s0[static_cast<std::size_t>(i)] * std::exp(w));
    }
    o.sf_nodes = numerics.sf_nodes;
    o.sc_reference = numerics.sc_reference;
    o.sc_span = numerics.sc_span;
    o.sc_nodes = numerics.sc_nodes;
    o.lambda_level = numerics.lambda_level;
    return o;
}

Instance parse_instance(const std::string& json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("instance: malformed JSON: ") + e.what());
    }
    Section top(root, "instance");
    Instance inst;
    inst.model = read_model(Section(top.at("model"), "model"));

    {
        Section c(top.at("costs"), "costs");
        const auto n = static_cast<std::size_t>(inst.model.dc + 1);
        const CostMatrix raw(inst.model.dc, flat_matrix(c.at("lambda_rate"), n, "costs.lambda_rate"));
        c.finish();
        inst.costs = normalize_costs(raw);
        inst.cost_adjustments = describe_adjustments(raw, inst.costs);
    }
    inst.section = build_polar_section(inst.costs);

    std::string table_bytes;
    inst.payoff = read_payoff(Section(top.at("payoff"), "payoff"), inst.model, inst.section, base_dir, table_bytes);
    inst.numerics = read_numerics(Section(top.get("numerics") ? *top.get("numerics") : json::object(), "numerics"),
                                  inst.model);
    top.finish();

    check_conditioning(inst.model, inst.numerics.max_condition_number);
    check_admissibility(inst.payoff, inst.section, inst.model.s0);

    const std::string canonical = root.dump() + table_bytes;
    inst.hash = fnv1a_hex(canonical);
    return inst;
}

Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("instance: cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str(), path.parent_path());
}

}  // namespace bhsr
