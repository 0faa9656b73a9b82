#include "bhsr/payoff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bhsr/errors.hpp"
#include "bhsr/numeric.hpp"

namespace bhsr {

namespace {

constexpr std::size_t kMaxDim = 24;

// Position of x on an increasing axis: segment k and weight w in [0, 1].
std::pair<std::size_t, double> locate_clamped(const std::vector<double>& axis, double x) {
    if (axis.size() == 1 || x <= axis.front()) return {0, 0.0};
    if (x >= axis.back()) return {axis.size() - 2, 1.0};
    const auto it = std::upper_bound(axis.begin(), axis.end(), x);
    const auto k = static_cast<std::size_t>(it - axis.begin()) - 1;
    return {k, (x - axis[k]) / (axis[k + 1] - axis[k])};
}

}  // namespace

void TabulatedPayoff::evaluate(std::span<const double> s, int dc, std::span<double> out) const {
    const std::size_t d = axes.size();
    const auto width = static_cast<std::size_t>(1 + dc);
    std::array<std::size_t, kMaxDim> k{};
    std::array<double, kMaxDim> w{};
    std::array<std::size_t, kMaxDim> stride{};
    std::size_t st = width;
    for (std::size_t i = d; i-- > 0;) {
        stride[i] = st;
        st *= axes[i].size();
    }
    for (std::size_t i = 0; i < d; ++i) {
        std::tie(k[i], w[i]) = locate_clamped(axes[i], s[i]);
        if (axes[i].size() == 1) w[i] = 0.0;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
        double weight = 1.0;
        std::size_t off = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const bool up = (corner >> i) & 1u;
            if (up && axes[i].size() == 1) {
                weight = 0.0;
                break;
            }
            weight *= up ? w[i] : 1.0 - w[i];
            off += (k[i] + (up ? 1 : 0)) * stride[i];
        }
        if (weight == 0.0) continue;
        for (std::size_t c = 0; c < width; ++c) out[c] += weight * values[off + c];
    }
}

TabulatedPayoff load_tabulated_csv(const std::filesystem::path& path, int df, int dc) {
    std::ifstream in(path);
    if (!in) throw ValidationError("tabulated payoff: cannot open " + path.string());
    const auto d = static_cast<std::size_t>(df + dc);
    const auto width = static_cast<std::size_t>(1 + dc);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError("tabulated payoff: bad number on line " + std::to_string(lineno));
            }
        }
        if (row.size() != d + width) {
            throw ValidationError("tabulated payoff: line " + std::to_string(lineno) + " has " +
                                  std::to_string(row.size()) + " columns, expected " + std::to_string(d + width));
        }
        for (std::size_t i = 0; i < d; ++i)
            if (!(row[i] >= 0.0)) throw ValidationError("tabulated payoff: negative price on line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    TabulatedPayoff t;
    t.axes.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (const auto& r : rows) t.axes[i].push_back(r[i]);
        std::sort(t.axes[i].begin(), t.axes[i].end());
        t.axes[i].erase(std::unique(t.axes[i].begin(), t.axes[i].end()), t.axes[i].end());
    }
    std::size_t nodes = 1;
    for (const auto& ax : t.axes) nodes *= ax.size();
    if (nodes != rows.size()) {
        throw ValidationError("tabulated payoff: rows do not form a full rectangular grid (" +
                              std::to_string(rows.size()) + " rows, " + std::to_string(nodes) + " grid nodes)");
    }
    t.values.assign(nodes * width, std::nan(""));
    for (const auto& r : rows) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const auto k = static_cast<std::size_t>(std::lower_bound(t.axes[i].begin(), t.axes[i].end(), r[i]) - t.axes[i].begin());
            off = off * t.axes[i].size() + k;
        }
        for (std::size_t c = 0; c < width; ++c) t.values[off * width + c] = r[d + c];
    }
    if (std::any_of(t.values.begin(), t.values.end(), [](double v) { return std::isnan(v); })) {
        throw ValidationError("tabulated payoff: duplicate rows leave grid nodes empty");
    }
    return t;
}

double transform_G(const PayoffSpec& payoff, const PolarSection& section, std::span<const double> z, int level) {
    const int df = payoff.df;
    const int dc = payoff.dc;
    const auto n = static_cast<std::size_t>(1 + dc);
    std::array<double, kMaxDim> s{};
    std::array<double, kMaxDim> g{};
    for (int i = 0; i < df; ++i) s[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)];

    auto value_at = [&](std::span<const double> xi) {
        for (int i = 0; i < dc; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            s[static_cast<std::size_t>(df) + ui] = z[static_cast<std::size_t>(df) + ui] / xi[ui + 1];
        }
        payoff.evaluate(std::span<const double>(s.data(), static_cast<std::size_t>(df + dc)), std::span<double>(g.data(), n));
        double v = 0.0;
        for (std::size_t c = 0; c < n; ++c) v += xi[c] * g[c];
        return v;
    };

    double best = -kInf;
    for (std::size_t k = 0; k < section.n_vertices(); ++k) best = std::max(best, value_at(section.vertex(k)));

    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> hi{};
    for (int i = 0; i < dc; ++i) {
        lo[static_cast<std::size_t>(i)] = section.min_component(i);
        hi[static_cast<std::size_t>(i)] = section.max_component(i);
    }

    std::array<double, kMaxDim> xi{};
    std::array<double, kMaxDim> xi_best{};
    const std::span<const double> xi_view(xi.data(), n);
    xi[0] = 1.0;

    for (int l = 0; l <= level; ++l) {
        const int pts = 32 * (1 << l) + 1;
        double level_best = -kInf;
        std::array<int, kMaxDim> idx{};
        while (true) {
            for (int i = 0; i < dc; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                xi[ui + 1] = lo[ui] + (hi[ui] - lo[ui]) * idx[ui] / (pts - 1);
            }
            if (section.contains(xi_view, 1e-12)) {
                const double v = value_at(xi_view);
                if (v > level_best) {
                    level_best = v;
                    xi_best = xi;
                }
            }
            int k = 0;
            while (k < dc && ++idx[static_cast<std::size_t>(k)] == pts) idx[static_cast<std::size_t>(k++)] = 0;
            if (k == dc) break;
        }
        if (!std::isfinite(level_best)) continue;

        // One coordinate-ascent pass over the feasible interval of each coordinate.
        xi = xi_best;
        double cur = level_best;
        for (int i = 0; i < dc; ++i) {
            const int col = i + 1;
            double a = lo[static_cast<std::size_t>(i)];
            double b = hi[static_cast<std::size_t>(i)];
            for (const auto& h : section.constraints()) {
                if (h.j == col && h.i != col) b = std::min(b, xi[static_cast<std::size_t>(h.i)] * h.factor);
                if (h.i == col && h.j != col) a = std::max(a, xi[static_cast<std::size_t>(h.j)] / h.factor);
            }
            if (a > b) continue;
            const double keep = xi[static_cast<std::size_t>(col)];
            double arg = keep;
            for (int k = 0; k < 33; ++k) {
                xi[static_cast<std::size_t>(col)] = a + (b - a) * k / 32.0;
                const double v = value_at(xi_view);
                if (v > cur) {
                    cur = v;
                    arg = xi[static_cast<std::size_t>(col)];
                }
            }
            xi[static_cast<std::size_t>(col)] = arg;
        }
        best = std::max({best, level_best, cur});
    }
    return best;
}

}  // namespace bhsr
