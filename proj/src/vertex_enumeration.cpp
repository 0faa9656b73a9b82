#include "bhsr/vertex_enumeration.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <numeric>

#include "bhsr/errors.hpp"

namespace bhsr::polytope {

namespace {

bool feasible(const HRep& h, const Eigen::VectorXd& y, double tol) {
    const Eigen::VectorXd slack = h.a * y - h.b;
    for (Eigen::Index r = 0; r < slack.size(); ++r) {
        if (slack[r] > tol * std::max(1.0, std::abs(h.b[r]))) return false;
    }
    return true;
}

// Rows are capped at 8 costly assets: (1+8)*8 = 72 facets.
using RowSet = std::bitset<128>;

}  // namespace

std::vector<Eigen::VectorXd> dedup_sorted(std::vector<Eigen::VectorXd> pts, double tol) {
    std::vector<Eigen::VectorXd> out;
    for (auto& p : pts) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Eigen::VectorXd& q) {
            return (p - q).cwiseAbs().maxCoeff() <= tol;
        });
        if (!dup) out.push_back(std::move(p));
    }
    // Coordinates closer than tol count as equal, so the order does not depend
    // on which method produced the last few bits.
    auto lex_less = [tol](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        for (Eigen::Index k = 0; k < a.size(); ++k)
            if (std::abs(a[k] - b[k]) > tol) return a[k] < b[k];
        return false;
    };
    std::sort(out.begin(), out.end(), lex_less);
    return out;
}

std::vector<Eigen::VectorXd> enumerate_bases(const HRep& h, double feas_tol, double dedup_tol) {
    const int dim = h.dim();
    const int m = static_cast<int>(h.a.rows());
    std::vector<Eigen::VectorXd> found;
    if (dim == 0 || m < dim) return found;

    // Iterate over dim-subsets of rows in lexicographic order.
    std::vector<int> idx(static_cast<std::size_t>(dim));
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::MatrixXd sub(dim, dim);
    Eigen::VectorXd rhs(dim);
    while (true) {
        for (int k = 0; k < dim; ++k) {
            sub.row(k) = h.a.row(idx[static_cast<std::size_t>(k)]);
            rhs[k] = h.b[idx[static_cast<std::size_t>(k)]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        if (lu.isInvertible()) {
            Eigen::VectorXd y = lu.solve(rhs);
            if (feasible(h, y, feas_tol)) found.push_back(std::move(y));
        }
        int k = dim - 1;
        while (k >= 0 && idx[static_cast<std::size_t>(k)] == m - dim + k) --k;
        if (k < 0) break;
        ++idx[static_cast<std::size_t>(k)];
        for (int r = k + 1; r < dim; ++r) idx[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(r - 1)] + 1;
    }
    return dedup_sorted(std::move(found), dedup_tol);
}

std::vector<Eigen::VectorXd> enumerate_double_description(const HRep& h, double feas_tol,
                                                          double dedup_tol) {
    const int dim = h.dim();
    const int m = static_cast<int>(h.a.rows());
    if (m > static_cast<int>(RowSet().size())) throw NumericError("double description: too many rows");

    Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
    std::vector<int> box_rows;
    std::vector<int> cut_rows;
    for (int r = 0; r < m; ++r) {
        int nz = 0;
        int col = -1;
        for (int c = 0; c < dim; ++c) {
            if (h.a(r, c) != 0.0) {
                ++nz;
                col = c;
            }
        }
        if (nz == 1) {
            const double bound = h.b[r] / h.a(r, col);
            if (h.a(r, col) > 0) hi[col] = std::min(hi[col], bound);
            else lo[col] = std::max(lo[col], bound);
            box_rows.push_back(r);
        } else {
            cut_rows.push_back(r);
        }
    }
    for (int c = 0; c < dim; ++c) {
        if (!std::isfinite(lo[c]) || !std::isfinite(hi[c]) || lo[c] > hi[c]) {
            throw NumericError("double description: single-variable rows do not bound the polytope");
        }
    }

    std::vector<Eigen::VectorXd> verts;
    for (unsigned mask = 0; mask < (1u << dim); ++mask) {
        Eigen::VectorXd v(dim);
        for (int c = 0; c < dim; ++c) v[c] = (mask >> c & 1u) ? hi[c] : lo[c];
        verts.push_back(std::move(v));
    }
    verts = dedup_sorted(std::move(verts), dedup_tol);

    std::vector<int> processed = box_rows;
    auto tight_sets = [&](const std::vector<Eigen::VectorXd>& vs) {
        std::vector<RowSet> out(vs.size());
        for (std::size_t k = 0; k < vs.size(); ++k) {
            for (int r : processed) {
                const double s = h.a.row(r).dot(vs[k]) - h.b[r];
                if (std::abs(s) <= feas_tol * std::max(1.0, std::abs(h.b[r])) * 1e3) out[k].set(static_cast<std::size_t>(r));
            }
        }
        return out;
    };

    for (int r : cut_rows) {
        const auto tight = tight_sets(verts);
        const double scale = feas_tol * std::max(1.0, std::abs(h.b[r]));
        std::vector<double> slack(verts.size());
        for (std::size_t k = 0; k < verts.size(); ++k) slack[k] = h.a.row(r).dot(verts[k]) - h.b[r];

        std::vector<Eigen::VectorXd> next;
        std::vector<std::size_t> strictly_in;
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < verts.size(); ++k) {
            if (slack[k] <= scale) next.push_back(verts[k]);
            if (slack[k] < -scale) strictly_in.push_back(k);
            if (slack[k] > scale) out.push_back(k);
        }
        if (out.empty()) {
            processed.push_back(r);
            continue;
        }
        for (std::size_t v : strictly_in) {
            for (std::size_t w : out) {
                const RowSet common = tight[v] & tight[w];
                if (static_cast<int>(common.count()) < dim - 1) continue;
                bool adjacent = true;
                for (std::size_t u = 0; u < verts.size() && adjacent; ++u) {
                    if (u != v && u != w && (common & ~tight[u]).none()) adjacent = false;
                }
                if (!adjacent) continue;
                const double t = slack[v] / (slack[v] - slack[w]);
                next.push_back(verts[v] + t * (verts[w] - verts[v]));
            }
        }
        verts = dedup_sorted(std::move(next), dedup_tol);
        processed.push_back(r);
    }
    return verts;
}

}  // namespace bhsr::polytope
