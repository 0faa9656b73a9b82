#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bhsr/cone.hpp"

namespace bhsr {

enum class CostlyGrowth { bounded, linear, superlinear };

/// Growth of the worst-case transform G in one costly coordinate beyond the
/// sampled range: G grows at most like G(boundary) + slope * (s - boundary).
struct CostlyTail {
    CostlyGrowth kind = CostlyGrowth::bounded;
    double slope = 0.0;
};

/// Certificate that g(s) dominates -(c + delta_f . s^f, delta * s^c) in the
/// cone order, i.e. the claim is bounded below by a static position.
struct AdmissibilityBound {
    double c = 0.0;
    std::vector<double> delta_f;
    double delta = 0.0;
};

enum class PayoffKind {
    zero,
    digital_barrier_call,  // ([s^f_0 - K1]^+ 1{s^c_a > K2}, 0)
    free_call,             // ([s^f_0 - K]^+, 0)
    costly_call_cash,      // ([s^c_a - K]^+, 0)
    costly_capped_call,    // (min([s^c_a - K]^+, cap), 0)
    costly_physical_call,  // (-K, s^c_a e_a) 1{s^c_a > K}
    basket_call,           // ([s^f_0 + s^c_a - K]^+, 0)
    tabulated,
};

std::string to_string(PayoffKind k);
PayoffKind payoff_kind_from_string(const std::string& id);

/// Claim given on a rectangular product grid over (s^f, s^c). Values are
/// interpolated multilinearly and clamped outside the table.
struct TabulatedPayoff {
    std::vector<std::vector<double>> axes;  // one increasing axis per price coordinate
    std::vector<double> values;             // row-major over axes, (1+dc) per node

    void evaluate(std::span<const double> s, int dc, std::span<double> out) const;
};

/// Reads columns sf1..sfN, sc1..scM, g1..g(1+M) (header required) forming a
/// full product grid in any row order.
TabulatedPayoff load_tabulated_csv(const std::filesystem::path& path, int df, int dc);

/// Wealth offset x carried into the claim: g(s; x) = g(s) - (x^0, diag[sc0]^-1 diag[s^c] x_c).
struct PayoffOffset {
    std::vector<double> x;
    std::vector<double> sc0;
};

/// Catalog parameters resolved once from the params map.
struct CatalogParams {
    double strike = 0.0;   // K1 / K
    double barrier = 0.0;  // K2
    double cap = 0.0;
    int asset = 0;         // costly index the claim reads
};

struct PayoffSpec {
    int df = 1;
    int dc = 1;
    PayoffKind kind = PayoffKind::zero;
    std::map<std::string, double> params;
    CatalogParams catalog;
    AdmissibilityBound growth;
    std::vector<CostlyTail> zc_growth;
    std::shared_ptr<const TabulatedPayoff> table;
    std::optional<PayoffOffset> offset;
    /// Raw price levels where g jumps or kinks (grid hints), per coordinate.
    std::vector<std::vector<double>> sf_kinks;
    std::vector<std::vector<double>> sc_kinks;

    int d() const { return df + dc; }

    /// g(s) written into out (size 1+dc); s has size df+dc, all entries >= 0.
    void evaluate(std::span<const double> s, std::span<double> out) const;
    std::vector<double> operator()(std::span<const double> s) const;
};

/// Catalog constructor. `params` keys: strike_free, barrier_costly, strike,
/// cap, asset (costly index, default 0). Tail certificates of the linear
/// entries depend on the section, so it is required here.
PayoffSpec make_catalog_payoff(PayoffKind kind, int df, int dc, const std::map<std::string, double>& params,
                               const PolarSection& section);

PayoffSpec make_tabulated_payoff(int df, int dc, std::shared_ptr<const TabulatedPayoff> table,
                                 AdmissibilityBound growth, std::vector<CostlyTail> tails);

/// The claim with wealth offset x, certificates adjusted accordingly.
PayoffSpec with_offset(const PayoffSpec& payoff, std::span<const double> x, std::span<const double> sc0);

/// Checks the admissibility certificate on a log-spaced sample grid around
/// `s_ref`; throws ValidationError naming the first failing point.
void check_admissibility(const PayoffSpec& payoff, const PolarSection& section, std::span<const double> s_ref,
                         int points_per_dim = 7);

/// G(z) = sup over the section of xi . g(z^f, diag[xi_c]^-1 z^c). Evaluated at
/// every vertex, on nested grids over the section (32 * 2^level + 1 points per
/// dimension) and after one coordinate-ascent pass from the best grid point of
/// each level. Nondecreasing in `level`.
double transform_G(const PayoffSpec& payoff, const PolarSection& section, std::span<const double> z,
                   int level = 0);

struct TransformGridOptions {
    std::vector<double> sf_lo;   // per free asset, positive
    std::vector<double> sf_hi;
    int sf_nodes = 801;
    std::vector<double> sc_reference;  // q per costly asset
    double sc_span = 50.0;             // positive sc nodes cover [q/span, q*span]
    int sc_nodes = 121;
    int lambda_level = 0;
};

/// G and its concave envelope in s^c tabulated on a product grid. Costly axes
/// start with the node 0 (right limit of the open orthant) followed by
/// log-spaced nodes and the payoff's kink levels mapped through the section.
class TransformGrid {
public:
    int df = 1;
    int dc = 1;
    std::vector<std::vector<double>> sf_axes;
    std::vector<std::vector<double>> sc_axes;
    std::vector<double> sc_lo;  // truncation bounds of the positive nodes
    std::vector<double> sc_hi;
    std::vector<CostlyTail> tails;
    std::vector<double> g_values;     // [sf node][sc node]
    std::vector<double> ghat_values;  // empty until concave_envelope

    std::size_t sf_count() const;
    std::size_t sc_count() const;
    bool has_envelope() const { return !ghat_values.empty(); }

    std::span<const double> g_fiber(std::size_t sf_flat) const {
        return {g_values.data() + sf_flat * sc_count(), sc_count()};
    }
    std::span<const double> ghat_fiber(std::size_t sf_flat) const {
        return {ghat_values.data() + sf_flat * sc_count(), sc_count()};
    }
    /// Coordinates of flat sc node k.
    void sc_point(std::size_t k, std::span<double> out) const;
    void sf_point(std::size_t k, std::span<double> out) const;

    /// Envelope at an arbitrary point: log-linear in s^f inside the grid,
    /// linear in s^f outside, multilinear in s^c, tail slopes beyond sc_hi.
    double ghat_at(std::span<const double> sf, std::span<const double> sc) const;

    /// Envelope fiber blended at s^f; returns it in `out` (size sc_count()).
    void blend_fiber(std::span<const double> sf, std::span<double> out) const;

    void save(const std::filesystem::path& prefix) const;  // prefix.json + prefix_values.csv
    static TransformGrid load(const std::filesystem::path& prefix);
};

/// Allocates the grid and fills g_values with transform_G (parallel over s^f fibers).
TransformGrid build_transform_grid(const PayoffSpec& payoff, const PolarSection& section,
                                   const TransformGridOptions& options);

/// Fills ghat_values. dc == 1: upper hull (monotone chain) of each fiber with
/// the tail certificate as a terminal ray. dc >= 2: discrete biconjugate over
/// the sc nodes with per-axis slope sets taken from the fiber's own finite
/// differences, i.e. the smallest concave majorant supported by those slopes.
/// Throws NumericError if some costly tail is superlinear.
TransformGrid concave_envelope(const PayoffSpec& payoff, const PolarSection& section, TransformGrid grid);

struct ConjugateValue {
    double value;          // +inf when delta is outside the finite domain
    std::size_t argmax;    // flat sc node attaining the sup (first on ties)
};

/// C(sf; delta) = sup over s^c of ghat(sf, s^c) - delta . s^c on the grid.
ConjugateValue conjugate_C(const TransformGrid& grid, std::span<const double> sf, std::span<const double> delta);

/// C(.; delta) for one fixed delta, with delta . s^c precomputed on the nodes.
/// Use it when evaluating many s^f points at the same delta.
class Conjugate {
public:
    Conjugate(const TransformGrid& grid, std::span<const double> delta);
    bool finite() const { return finite_; }
    ConjugateValue operator()(std::span<const double> sf) const;

private:
    const TransformGrid* grid_;
    bool finite_;
    std::vector<double> lin_;
};

/// True iff every delta_i >= tail slope i, i.e. C(.; delta) is finite.
bool in_conjugate_domain(const TransformGrid& grid, std::span<const double> delta);

}  // namespace bhsr
