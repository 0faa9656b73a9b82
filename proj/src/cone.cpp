#include "bhsr/cone.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bhsr/errors.hpp"
#include "bhsr/vertex_enumeration.hpp"

namespace bhsr {

CostMatrix::CostMatrix(int dc, std::vector<double> rates) : dc_(dc), rates_(std::move(rates)) {
    if (dc < 1) throw ValidationError("CostMatrix: dc must be >= 1");
    const auto n = static_cast<std::size_t>(dc + 1);
    if (rates_.size() != n * n) {
        throw ValidationError("CostMatrix: expected " + std::to_string(n * n) + " entries, got " +
                              std::to_string(rates_.size()));
    }
    for (int i = 0; i < size(); ++i) {
        for (int j = 0; j < size(); ++j) {
            const double l = (*this)(i, j);
            if (!std::isfinite(l) || l < 0.0) {
                throw ValidationError("CostMatrix invariant violated: lambda[" + std::to_string(i) + "][" +
                                      std::to_string(j) + "] must be a finite nonnegative rate");
            }
            if (i == j && l != 0.0) {
                throw ValidationError("CostMatrix invariant violated: diagonal entry lambda[" +
                                      std::to_string(i) + "][" + std::to_string(i) + "] must be zero");
            }
        }
    }
}

CostMatrix CostMatrix::uniform(int dc, double rate) {
    const auto n = static_cast<std::size_t>(dc + 1);
    std::vector<double> r(n * n, rate);
    for (std::size_t i = 0; i < n; ++i) r[i * n + i] = 0.0;
    return CostMatrix(dc, std::move(r));
}

bool CostMatrix::satisfies_triangle(double rel_tol) const {
    for (int i = 0; i < size(); ++i)
        for (int k = 0; k < size(); ++k)
            for (int j = 0; j < size(); ++j) {
                const double direct = 1.0 + (*this)(i, j);
                const double chain = (1.0 + (*this)(i, k)) * (1.0 + (*this)(k, j));
                if (direct > chain * (1.0 + rel_tol)) return false;
            }
    return true;
}

bool CostMatrix::efficient() const {
    for (int i = 0; i < size(); ++i)
        for (int j = i + 1; j < size(); ++j)
            if (!((*this)(i, j) + (*this)(j, i) > 0.0)) return false;
    return true;
}

CostMatrix normalize_costs(const CostMatrix& costs) {
    const int n = costs.size();
    std::vector<double> factor(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) factor[static_cast<std::size_t>(i * n + j)] = 1.0 + costs(i, j);
    // Entries never lowered keep their exact input value ((1 + l) - 1 may round).
    std::vector<bool> lowered(factor.size(), false);
    // Floyd-Warshall over multiplicative weights; all factors are >= 1 so no
    // cycle can shrink a product below the direct entry's lower bound of 1.
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double via = factor[static_cast<std::size_t>(i * n + k)] * factor[static_cast<std::size_t>(k * n + j)];
                auto& direct = factor[static_cast<std::size_t>(i * n + j)];
                if (via < direct) {
                    direct = via;
                    lowered[static_cast<std::size_t>(i * n + j)] = true;
                }
            }
    std::vector<double> rates(factor.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            rates[static_cast<std::size_t>(i * n + j)] =
                i == j ? 0.0 : lowered[static_cast<std::size_t>(i * n + j)] ? factor[static_cast<std::size_t>(i * n + j)] - 1.0 : costs(i, j);
    CostMatrix out(costs.dc(), std::move(rates));
    if (!out.efficient()) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (!(out(i, j) + out(j, i) > 0.0)) {
                    throw ValidationError("CostMatrix invariant violated (efficiency): after chain closure, "
                                          "lambda[" + std::to_string(i) + "][" + std::to_string(j) +
                                          "] + lambda[" + std::to_string(j) + "][" + std::to_string(i) +
                                          "] == 0 admits a free round trip");
                }
    }
    return out;
}

std::vector<std::string> describe_adjustments(const CostMatrix& before, const CostMatrix& after) {
    std::vector<std::string> out;
    for (int i = 0; i < before.size(); ++i)
        for (int j = 0; j < before.size(); ++j)
            if (before(i, j) != after(i, j)) {
                std::ostringstream s;
                s << std::setprecision(17) << "lambda[" << i << "][" << j << "] lowered from " << before(i, j)
                  << " to " << after(i, j) << " (cheaper transfer chain)";
                out.push_back(s.str());
            }
    return out;
}

double PolarSection::min_component(int i) const {
    double m = vertex(0)[static_cast<std::size_t>(1 + i)];
    for (std::size_t k = 1; k < n_vertices(); ++k) m = std::min(m, vertex(k)[static_cast<std::size_t>(1 + i)]);
    return m;
}

double PolarSection::max_component(int i) const {
    double m = vertex(0)[static_cast<std::size_t>(1 + i)];
    for (std::size_t k = 1; k < n_vertices(); ++k) m = std::max(m, vertex(k)[static_cast<std::size_t>(1 + i)]);
    return m;
}

bool PolarSection::contains(std::span<const double> xi, double tol) const {
    if (static_cast<int>(xi.size()) != dim() || std::abs(xi[0] - 1.0) > tol) return false;
    return std::all_of(constraints_.begin(), constraints_.end(), [&](const HalfSpace& c) {
        return xi[static_cast<std::size_t>(c.j)] <= xi[static_cast<std::size_t>(c.i)] * c.factor + tol;
    });
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

void check_dim(std::span<const double> x, const PolarSection& s) {
    if (static_cast<int>(x.size()) != s.dim()) {
        throw ValidationError("cone vector has dimension " + std::to_string(x.size()) + ", expected " +
                              std::to_string(s.dim()));
    }
}

}  // namespace

std::pair<double, std::size_t> PolarSection::min_dot(std::span<const double> x) const {
    check_dim(x, *this);
    std::pair<double, std::size_t> best{dot(vertex(0), x), 0};
    for (std::size_t k = 1; k < n_vertices(); ++k) {
        const double v = dot(vertex(k), x);
        if (v < best.first) best = {v, k};
    }
    return best;
}

std::pair<double, std::size_t> PolarSection::max_dot(std::span<const double> x) const {
    check_dim(x, *this);
    std::pair<double, std::size_t> best{dot(vertex(0), x), 0};
    for (std::size_t k = 1; k < n_vertices(); ++k) {
        const double v = dot(vertex(k), x);
        if (v > best.first) best = {v, k};
    }
    return best;
}

void PolarSection::write_csv(std::ostream& out) const {
    out << "vertex";
    for (int c = 0; c < dim(); ++c) out << ",xi" << c;
    out << '\n' << std::setprecision(17);
    for (std::size_t k = 0; k < n_vertices(); ++k) {
        out << k;
        for (double v : vertex(k)) out << ',' << v;
        out << '\n';
    }
}

PolarSection build_polar_section(const CostMatrix& costs, VertexMethod method) {
    const int dc = costs.dc();
    if (dc > kMaxCostlyAssets) {
        throw ValidationError("PolarSection: dc = " + std::to_string(dc) + " exceeds the supported maximum of " +
                              std::to_string(kMaxCostlyAssets));
    }
    if (!costs.efficient()) {
        throw ValidationError("CostMatrix invariant violated (efficiency): lambda_ij + lambda_ji must be > 0 "
                              "for every pair");
    }
    PolarSection s;
    s.dc_ = dc;
    const int n = dc + 1;

    // Work in y = (xi^1..xi^dc) with xi^0 = 1.
    polytope::HRep h;
    h.a = Eigen::MatrixXd::Zero(n * dc, dc);
    h.b = Eigen::VectorXd::Zero(n * dc);
    int row = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double f = 1.0 + costs(i, j);
            s.constraints_.push_back({i, j, f});
            // xi^j - f xi^i <= 0
            if (j > 0) h.a(row, j - 1) += 1.0;
            else h.b[row] -= 1.0;
            if (i > 0) h.a(row, i - 1) -= f;
            else h.b[row] += f;
            ++row;
        }
    }

    const bool use_dd = method == VertexMethod::double_description || (method == VertexMethod::automatic && dc > 3);
    auto ys = use_dd ? polytope::enumerate_double_description(h) : polytope::enumerate_bases(h);
    s.method_ = use_dd ? "double-description" : "exact";
    if (ys.empty()) throw NumericError("PolarSection: vertex enumeration returned no vertices");

    s.vertices_.reserve(ys.size() * static_cast<std::size_t>(n));
    double bound = 1.0;
    for (const auto& y : ys) {
        s.vertices_.push_back(1.0);
        for (int c = 0; c < dc; ++c) {
            s.vertices_.push_back(y[c]);
            bound = std::max({bound, y[c], 1.0 / y[c]});
        }
    }
    s.component_bound_ = bound;
    return s;
}

double liquidation_value(std::span<const double> x, const PolarSection& section) {
    return section.min_dot(x).first;
}

bool cone_geq(std::span<const double> x, std::span<const double> y, const PolarSection& section, double tol) {
    check_dim(x, section);
    check_dim(y, section);
    std::vector<double> diff(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) diff[k] = x[k] - y[k];
    return liquidation_value(diff, section) >= -tol;
}

}  // namespace bhsr
