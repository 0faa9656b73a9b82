#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bhsr {

/// Proportional transaction cost rates between the 1+dc accounts: index 0 is
/// the numeraire account (cash plus the freely traded assets), indices 1..dc
/// are the costly assets. Entry (i, j) is the rate paid per unit of value
/// transferred from account i to account j.
class CostMatrix {
public:
    /// `rates` is row-major (1+dc)x(1+dc). Throws ValidationError on negative
    /// entries, a nonzero diagonal, or a size mismatch.
    CostMatrix(int dc, std::vector<double> rates);

    static CostMatrix uniform(int dc, double rate);

    int dc() const noexcept { return dc_; }
    int size() const noexcept { return dc_ + 1; }
    double operator()(int i, int j) const { return rates_[static_cast<std::size_t>(i * size() + j)]; }
    std::span<const double> rates() const noexcept { return rates_; }

    /// (1+l_ij) <= (1+l_ik)(1+l_kj) for every chain i -> k -> j.
    bool satisfies_triangle(double rel_tol = 1e-14) const;

    /// l_ij + l_ji > 0 for every pair: no free round trip into a costly asset.
    bool efficient() const;

    friend bool operator==(const CostMatrix&, const CostMatrix&) = default;

private:
    int dc_;
    std::vector<double> rates_;
};

/// Closes the matrix under the cheapest transfer chain: (1+l_ij) becomes the
/// minimum over all chains i -> ... -> j of the product of (1+l) factors.
/// Idempotent. Throws ValidationError if the closed matrix admits a free
/// round trip (l_ij + l_ji == 0 for some pair).
CostMatrix normalize_costs(const CostMatrix& costs);

/// Human-readable list of entries rewritten by normalize_costs.
std::vector<std::string> describe_adjustments(const CostMatrix& before, const CostMatrix& after);

/// One facet of the dual cone written on the section xi^0 = 1:
/// xi^j <= xi^i * factor, with factor = 1 + l_ij.
struct HalfSpace {
    int i;
    int j;
    double factor;
};

enum class VertexMethod { automatic, exact, double_description };

/// The compact section {xi in K* : xi^0 = 1} of the positive polar of the
/// solvency cone, held in both representations.
class PolarSection {
public:
    int dc() const noexcept { return dc_; }
    int dim() const noexcept { return dc_ + 1; }
    const std::vector<HalfSpace>& constraints() const noexcept { return constraints_; }
    std::size_t n_vertices() const noexcept { return vertices_.size() / static_cast<std::size_t>(dim()); }
    std::span<const double> vertex(std::size_t k) const {
        return {vertices_.data() + k * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
    }
    std::span<const double> vertex_data() const noexcept { return vertices_; }

    /// Bound d with every vertex component in [1/d, d].
    double component_bound() const noexcept { return component_bound_; }

    /// Smallest and largest value of component 1+i over the section.
    double min_component(int i) const;
    double max_component(int i) const;

    bool contains(std::span<const double> xi, double tol = 1e-12) const;

    /// min over vertices of xi . x, with the index of the first minimizer.
    std::pair<double, std::size_t> min_dot(std::span<const double> x) const;
    /// max over vertices of xi . x, with the index of the first maximizer.
    std::pair<double, std::size_t> max_dot(std::span<const double> x) const;

    const std::string& method() const noexcept { return method_; }

    void write_csv(std::ostream& out) const;

private:
    friend PolarSection build_polar_section(const CostMatrix&, VertexMethod);
    int dc_ = 0;
    std::vector<HalfSpace> constraints_;
    std::vector<double> vertices_;  // row-major, sorted lexicographically
    double component_bound_ = 1.0;
    std::string method_;
};

inline constexpr int kMaxCostlyAssets = 8;

/// Builds both representations from a normalized cost matrix. Vertices come
/// from exhaustive basis enumeration for dc <= 3 and from the double
/// description method above that (or as forced by `method`), deduplicated at
/// 1e-10. Throws ValidationError for dc > 8 or an inefficient matrix.
PolarSection build_polar_section(const CostMatrix& costs, VertexMethod method = VertexMethod::automatic);

/// min over the section of xi . x; x is solvent iff the result is >= 0.
double liquidation_value(std::span<const double> x, const PolarSection& section);

/// x >= y in the cone order: every vertex prices x - y at no less than -tol.
bool cone_geq(std::span<const double> x, std::span<const double> y, const PolarSection& section,
              double tol = 0.0);

}  // namespace bhsr
