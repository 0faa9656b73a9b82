#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "bhsr/errors.hpp"
#include "bhsr/numeric.hpp"
#include "bhsr/parallel.hpp"
#include "bhsr/payoff.hpp"
#include "bhsr/simd/kernels.hpp"

namespace bhsr {

namespace {

using json = nlohmann::json;

constexpr double kUscEps = 1e-12;
constexpr std::size_t kMaxGridDim = 16;

std::vector<double> log_space(double lo, double hi, int n) {
    std::vector<double> out;
    if (n == 1) return {std::sqrt(lo * hi)};
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int k = 0; k < n; ++k) out.push_back(std::exp(a + (b - a) * k / (n - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
}

// Sorted union with near-duplicates (relative 1e-12) collapsed onto the first.
std::vector<double> merge_axis(std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts) {
        if (!out.empty() && std::abs(p - out.back()) <= 1e-12 * std::max(1.0, std::abs(p))) continue;
        out.push_back(p);
    }
    return out;
}

std::size_t product_size(const std::vector<std::vector<double>>& axes) {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
}

void flat_point(const std::vector<std::vector<double>>& axes, std::size_t k, std::span<double> out) {
    for (std::size_t i = axes.size(); i-- > 0;) {
        const std::size_t n = axes[i].size();
        out[i] = axes[i][k % n];
        k /= n;
    }
}

// Segment index and weight of x on an axis. Inside the axis the weight is
// linear in log x; outside it is linear in x (extrapolation).
struct AxisWeight {
    std::size_t k;
    double w;
};

AxisWeight sf_weight(const std::vector<double>& axis, double x) {
    if (axis.size() == 1) return {0, 0.0};
    const std::size_t n = axis.size();
    if (x <= axis.front()) return {0, (x - axis[0]) / (axis[1] - axis[0])};
    if (x >= axis.back()) return {n - 2, (x - axis[n - 2]) / (axis[n - 1] - axis[n - 2])};
    const auto k = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin()) - 1;
    return {k, std::log(x / axis[k]) / std::log(axis[k + 1] / axis[k])};
}

AxisWeight sc_weight(const std::vector<double>& axis, double x) {
    if (axis.size() == 1 || x <= axis.front()) return {0, 0.0};
    const std::size_t n = axis.size();
    if (x >= axis.back()) return {n - 2, 1.0};
    const auto k = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin()) - 1;
    return {k, (x - axis[k]) / (axis[k + 1] - axis[k])};
}

double g_usc(const PayoffSpec& payoff, const PolarSection& section, std::span<double> z, int level) {
    // Node values take the upper limit over a relative 1e-12 neighbourhood in
    // z^c so that jumps placed exactly on a node resolve to the larger side.
    const auto df = static_cast<std::size_t>(payoff.df);
    double best = transform_G(payoff, section, z, level);
    std::array<double, kMaxGridDim> zz{};
    for (double f : {1.0 + kUscEps, 1.0 - kUscEps}) {
        for (std::size_t i = 0; i < z.size(); ++i) zz[i] = i < df ? z[i] : z[i] * f;
        best = std::max(best, transform_G(payoff, section, std::span<const double>(zz.data(), z.size()), level));
    }
    return best;
}

// Upper hull of (x, y) over nodes [0, n) with a terminal ray of slope `tail`.
void hull_1d(std::span<const double> x, std::span<const double> y, double tail, std::span<double> out) {
    const std::size_t n = x.size();
    std::size_t v = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (y[k] - tail * x[k] > y[v] - tail * x[v]) v = k;
    std::vector<std::size_t> h;
    for (std::size_t k = 0; k <= v; ++k) {
        while (h.size() >= 2) {
            const std::size_t a = h[h.size() - 2];
            const std::size_t b = h.back();
            const double cross = (x[b] - x[a]) * (y[k] - y[a]) - (y[b] - y[a]) * (x[k] - x[a]);
            if (cross >= 0.0) h.pop_back();
            else break;
        }
        h.push_back(k);
    }
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k >= v) {
            out[k] = y[v] + tail * (x[k] - x[v]);
            continue;
        }
        while (h[seg + 1] < k) ++seg;
        const std::size_t a = h[seg];
        const std::size_t b = h[seg + 1];
        if (k == a) out[k] = y[a];
        else if (k == b) out[k] = y[b];
        else out[k] = y[a] + (y[b] - y[a]) * (x[k] - x[a]) / (x[b] - x[a]);
    }
}

// Evenly thinned copy keeping both ends.
std::vector<double> thin(const std::vector<double>& s, std::size_t cap) {
    if (s.size() <= cap) return s;
    std::vector<double> out;
    for (std::size_t k = 0; k < cap; ++k) out.push_back(s[k * (s.size() - 1) / (cap - 1)]);
    return out;
}

}  // namespace

std::size_t TransformGrid::sf_count() const { return product_size(sf_axes); }
std::size_t TransformGrid::sc_count() const { return product_size(sc_axes); }

void TransformGrid::sc_point(std::size_t k, std::span<double> out) const { flat_point(sc_axes, k, out); }
void TransformGrid::sf_point(std::size_t k, std::span<double> out) const { flat_point(sf_axes, k, out); }

TransformGrid build_transform_grid(const PayoffSpec& payoff, const PolarSection& section,
                                   const TransformGridOptions& options) {
    const auto df = static_cast<std::size_t>(payoff.df);
    const auto dc = static_cast<std::size_t>(payoff.dc);
    if (df + dc > kMaxGridDim) throw ValidationError("TransformGrid: too many assets");
    if (options.sf_lo.size() != df || options.sf_hi.size() != df)
        throw ValidationError("TransformGrid: sf bounds need one entry per free asset");
    if (options.sc_reference.size() != dc)
        throw ValidationError("TransformGrid: sc reference needs one entry per costly asset");
    if (options.sf_nodes < 2 || options.sc_nodes < 2 || !(options.sc_span > 1.0))
        throw ValidationError("TransformGrid: need >= 2 nodes per axis and sc_span > 1");

    TransformGrid g;
    g.df = payoff.df;
    g.dc = payoff.dc;
    g.tails = payoff.zc_growth;
    for (std::size_t i = 0; i < df; ++i) {
        const double lo = options.sf_lo[i];
        const double hi = options.sf_hi[i];
        if (!(lo > 0.0 && hi > lo)) throw ValidationError("TransformGrid: need 0 < sf_lo < sf_hi");
        auto axis = log_space(lo, hi, options.sf_nodes);
        for (double k : payoff.sf_kinks[i])
            if (k > lo && k < hi) axis.push_back(k);
        g.sf_axes.push_back(merge_axis(std::move(axis)));
    }
    for (std::size_t i = 0; i < dc; ++i) {
        const double q = options.sc_reference[i];
        if (!(q > 0.0)) throw ValidationError("TransformGrid: sc reference must be positive");
        const double lo = q / options.sc_span;
        const double hi = q * options.sc_span;
        auto axis = log_space(lo, hi, options.sc_nodes);
        axis.push_back(0.0);
        // A level K in s^c reaches G through z^c / xi, so it shows up at K * xi
        // for the extreme values of xi.
        for (double k : payoff.sc_kinks[i]) {
            for (std::size_t v = 0; v < section.n_vertices(); ++v) {
                const double h = k * section.vertex(v)[i + 1];
                if (h > lo && h < hi) axis.push_back(h);
            }
        }
        g.sc_axes.push_back(merge_axis(std::move(axis)));
        g.sc_lo.push_back(lo);
        g.sc_hi.push_back(hi);
    }

    const std::size_t nsf = g.sf_count();
    const std::size_t nsc = g.sc_count();
    g.g_values.assign(nsf * nsc, 0.0);
    const std::size_t block = 8;
    const std::size_t n_blocks = (nsf + block - 1) / block;
    parallel_blocks(n_blocks, [&](std::size_t b) {
        std::array<double, kMaxGridDim> z{};
        const std::span<double> zs(z.data(), df + dc);
        for (std::size_t f = b * block; f < std::min(nsf, (b + 1) * block); ++f) {
            g.sf_point(f, zs.first(df));
            for (std::size_t c = 0; c < nsc; ++c) {
                g.sc_point(c, zs.subspan(df));
                g.g_values[f * nsc + c] = g_usc(payoff, section, zs, options.lambda_level);
            }
        }
    });
    return g;
}

TransformGrid concave_envelope(const PayoffSpec& payoff, const PolarSection&, TransformGrid grid) {
    for (std::size_t i = 0; i < payoff.zc_growth.size(); ++i) {
        if (payoff.zc_growth[i].kind == CostlyGrowth::superlinear) {
            throw NumericError("concave envelope is +inf: payoff grows superlinearly in costly asset " +
                               std::to_string(i));
        }
    }
    grid.tails = payoff.zc_growth;
    const std::size_t nsf = grid.sf_count();
    const std::size_t nsc = grid.sc_count();
    const auto dc = static_cast<std::size_t>(grid.dc);
    grid.ghat_values.assign(nsf * nsc, 0.0);

    if (dc == 1) {
        const auto& x = grid.sc_axes[0];
        const double tail = grid.tails[0].slope;
        parallel_blocks(nsf, [&](std::size_t f) {
            hull_1d(x, grid.g_fiber(f), tail,
                    std::span<double>(grid.ghat_values.data() + f * nsc, nsc));
        });
        return grid;
    }

    // dc >= 2: discrete biconjugate with slope vectors drawn from the product
    // of per-axis finite-difference slopes, at or above the tail slope.
    const auto per_axis_cap = static_cast<std::size_t>(std::floor(std::pow(1e5, 1.0 / static_cast<double>(dc))));
    std::vector<double> pts(nsc * dc);
    for (std::size_t c = 0; c < nsc; ++c) grid.sc_point(c, std::span<double>(pts.data() + c * dc, dc));
    std::vector<std::size_t> stride(dc);
    {
        std::size_t st = 1;
        for (std::size_t i = dc; i-- > 0;) {
            stride[i] = st;
            st *= grid.sc_axes[i].size();
        }
    }
    const auto& kern = simd::active();
    parallel_blocks(nsf, [&](std::size_t f) {
        const auto y = grid.g_fiber(f);
        std::vector<std::vector<double>> slopes(dc);
        for (std::size_t i = 0; i < dc; ++i) {
            const auto& ax = grid.sc_axes[i];
            const double tail = grid.tails[i].slope;
            std::vector<double> s{tail};
            for (std::size_t c = 0; c < nsc; ++c) {
                const std::size_t pos = (c / stride[i]) % ax.size();
                if (pos + 1 == ax.size()) continue;
                const double d = (y[c + stride[i]] - y[c]) / (ax[pos + 1] - ax[pos]);
                if (d >= tail) s.push_back(d);
            }
            slopes[i] = thin(merge_axis(std::move(s)), per_axis_cap);
        }
        std::size_t n_slopes = 1;
        for (const auto& s : slopes) n_slopes *= s.size();
        std::vector<double> lin(nsc);
        std::vector<double> a(dc);
        std::vector<double> best(nsc, kInf);
        for (std::size_t m = 0; m < n_slopes; ++m) {
            std::size_t r = m;
            for (std::size_t i = dc; i-- > 0;) {
                a[i] = slopes[i][r % slopes[i].size()];
                r /= slopes[i].size();
            }
            for (std::size_t c = 0; c < nsc; ++c) {
                double l = 0.0;
                for (std::size_t i = 0; i < dc; ++i) l += a[i] * pts[c * dc + i];
                lin[c] = l;
            }
            const double conj = kern.blend_max(y.data(), y.data(), 0.0, lin.data(), nsc).value;
            for (std::size_t c = 0; c < nsc; ++c) best[c] = std::min(best[c], conj + lin[c]);
        }
        std::copy(best.begin(), best.end(), grid.ghat_values.begin() + static_cast<std::ptrdiff_t>(f * nsc));
    });
    return grid;
}

void TransformGrid::blend_fiber(std::span<const double> sf, std::span<double> out) const {
    const std::size_t n = sc_count();
    const auto d = sf_axes.size();
    std::array<AxisWeight, kMaxGridDim> aw{};
    for (std::size_t i = 0; i < d; ++i) aw[i] = sf_weight(sf_axes[i], sf[i]);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double weight = 1.0;
        std::size_t flat = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const bool up = (corner >> i) & 1u;
            const std::size_t m = sf_axes[i].size();
            if (up && m == 1) {
                weight = 0.0;
                break;
            }
            weight *= up ? aw[i].w : 1.0 - aw[i].w;
            flat = flat * m + aw[i].k + (up ? 1 : 0);
        }
        if (weight == 0.0) continue;
        const auto fib = ghat_fiber(flat);
        for (std::size_t c = 0; c < n; ++c) out[c] += weight * fib[c];
    }
}

double TransformGrid::ghat_at(std::span<const double> sf, std::span<const double> sc) const {
    if (!has_envelope()) throw NumericError("TransformGrid: envelope not computed");
    std::vector<double> fiber(sc_count());
    blend_fiber(sf, fiber);
    const auto d = sc_axes.size();
    std::array<AxisWeight, kMaxGridDim> aw{};
    std::array<std::size_t, kMaxGridDim> stride{};
    std::size_t st = 1;
    for (std::size_t i = d; i-- > 0;) {
        stride[i] = st;
        st *= sc_axes[i].size();
    }
    double extra = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        aw[i] = sc_weight(sc_axes[i], sc[i]);
        if (sc[i] > sc_axes[i].back()) extra += tails[i].slope * (sc[i] - sc_axes[i].back());
    }
    double v = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double weight = 1.0;
        std::size_t flat = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const bool up = (corner >> i) & 1u;
            if (up && sc_axes[i].size() == 1) {
                weight = 0.0;
                break;
            }
            weight *= up ? aw[i].w : 1.0 - aw[i].w;
            flat += (aw[i].k + (up ? 1 : 0)) * stride[i];
        }
        if (weight != 0.0) v += weight * fiber[flat];
    }
    return v + extra;
}

bool in_conjugate_domain(const TransformGrid& grid, std::span<const double> delta) {
    for (std::size_t i = 0; i < grid.tails.size(); ++i)
        if (!(delta[i] >= grid.tails[i].slope)) return false;
    return true;
}

Conjugate::Conjugate(const TransformGrid& grid, std::span<const double> delta)
    : grid_(&grid), finite_(false) {
    if (!grid.has_envelope()) throw NumericError("conjugate_C: envelope not computed");
    if (static_cast<int>(delta.size()) != grid.dc) throw ValidationError("conjugate_C: dimension mismatch");
    finite_ = in_conjugate_domain(grid, delta);
    if (!finite_) return;
    const std::size_t n = grid.sc_count();
    lin_.resize(n);
    std::vector<double> pt(delta.size());
    for (std::size_t c = 0; c < n; ++c) {
        grid.sc_point(c, pt);
        double l = 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) l += delta[i] * pt[i];
        lin_[c] = l;
    }
}

ConjugateValue Conjugate::operator()(std::span<const double> sf) const {
    const auto& grid = *grid_;
    if (static_cast<int>(sf.size()) != grid.df) throw ValidationError("conjugate_C: dimension mismatch");
    if (!finite_) return {kInf, 0};
    const std::size_t n = lin_.size();
    const auto& kern = simd::active();
    if (grid.df == 1) {
        const auto aw = sf_weight(grid.sf_axes[0], sf[0]);
        const std::size_t k1 = grid.sf_axes[0].size() == 1 ? aw.k : aw.k + 1;
        const auto r = kern.blend_max(grid.ghat_fiber(aw.k).data(), grid.ghat_fiber(k1).data(), aw.w, lin_.data(), n);
        return {r.value, r.index};
    }
    thread_local std::vector<double> fiber;
    fiber.resize(n);
    grid.blend_fiber(sf, fiber);
    const auto r = kern.blend_max(fiber.data(), fiber.data(), 0.0, lin_.data(), n);
    return {r.value, r.index};
}

ConjugateValue conjugate_C(const TransformGrid& grid, std::span<const double> sf, std::span<const double> delta) {
    return Conjugate(grid, delta)(sf);
}

void TransformGrid::save(const std::filesystem::path& prefix) const {
    json h;
    h["df"] = df;
    h["dc"] = dc;
    h["sf_axes"] = sf_axes;
    h["sc_axes"] = sc_axes;
    h["sc_lo"] = sc_lo;
    h["sc_hi"] = sc_hi;
    json tj = json::array();
    for (const auto& t : tails) {
        const char* kind = t.kind == CostlyGrowth::bounded ? "bounded" : t.kind == CostlyGrowth::linear ? "linear" : "superlinear";
        tj.push_back({{"kind", kind}, {"slope", t.slope}});
    }
    h["tails"] = tj;
    h["has_envelope"] = has_envelope();
    const auto json_path = std::filesystem::path(prefix.string() + ".json");
    const auto csv_path = std::filesystem::path(prefix.string() + "_values.csv");
    h["values_file"] = csv_path.filename().string();
    std::ofstream(json_path) << h.dump(2) << '\n';

    std::ofstream out(csv_path);
    if (!out) throw ValidationError("TransformGrid: cannot write " + csv_path.string());
    for (int i = 0; i < df; ++i) out << "sf" << i + 1 << ',';
    for (int i = 0; i < dc; ++i) out << "sc" << i + 1 << ',';
    out << "G,Ghat\n" << std::setprecision(17);
    std::vector<double> a(static_cast<std::size_t>(df));
    std::vector<double> b(static_cast<std::size_t>(dc));
    const std::size_t nsc = sc_count();
    for (std::size_t f = 0; f < sf_count(); ++f) {
        sf_point(f, a);
        for (std::size_t c = 0; c < nsc; ++c) {
            sc_point(c, b);
            for (double v : a) out << v << ',';
            for (double v : b) out << v << ',';
            out << g_values[f * nsc + c] << ',';
            if (has_envelope()) out << ghat_values[f * nsc + c];
            out << '\n';
        }
    }
}

TransformGrid TransformGrid::load(const std::filesystem::path& prefix) {
    const auto json_path = std::filesystem::path(prefix.string() + ".json");
    std::ifstream in(json_path);
    if (!in) throw ValidationError("TransformGrid: cannot open " + json_path.string());
    TransformGrid g;
    try {
        const json h = json::parse(in);
        g.df = h.at("df").get<int>();
        g.dc = h.at("dc").get<int>();
        g.sf_axes = h.at("sf_axes").get<std::vector<std::vector<double>>>();
        g.sc_axes = h.at("sc_axes").get<std::vector<std::vector<double>>>();
        g.sc_lo = h.at("sc_lo").get<std::vector<double>>();
        g.sc_hi = h.at("sc_hi").get<std::vector<double>>();
        for (const auto& t : h.at("tails")) {
            const auto kind = t.at("kind").get<std::string>();
            CostlyTail tail;
            tail.kind = kind == "bounded" ? CostlyGrowth::bounded : kind == "linear" ? CostlyGrowth::linear : CostlyGrowth::superlinear;
            tail.slope = t.at("slope").get<double>();
            g.tails.push_back(tail);
        }
        const bool env = h.at("has_envelope").get<bool>();
        const auto csv_path = json_path.parent_path() / h.at("values_file").get<std::string>();
        std::ifstream vin(csv_path);
        if (!vin) throw ValidationError("TransformGrid: cannot open " + csv_path.string());
        std::string line;
        std::getline(vin, line);
        const std::size_t n = g.sf_count() * g.sc_count();
        const auto skip = static_cast<std::size_t>(g.df + g.dc);
        while (std::getline(vin, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::size_t col = 0;
            while (std::getline(ss, cell, ',')) {
                if (col == skip) g.g_values.push_back(std::stod(cell));
                if (col == skip + 1 && env) g.ghat_values.push_back(std::stod(cell));
                ++col;
            }
        }
        if (g.g_values.size() != n || (env && g.ghat_values.size() != n))
            throw ValidationError("TransformGrid: value file does not match the header axes");
    } catch (const json::exception& e) {
        throw ValidationError(std::string("TransformGrid: bad header: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ValidationError("TransformGrid: bad number in value file");
    }
    return g;
}

}  // namespace bhsr
