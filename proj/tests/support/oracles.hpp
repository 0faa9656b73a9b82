#pragma once

#include <vector>

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code.
namespace oracle {

double bs_call(double s, double k, double sig, double t);
double bs_digital(double s, double k, double sig, double t);
double bs_call_delta(double s, double k, double sig, double t);

/// Case-2 solution of the digital-barrier example: Delta with
/// P[S(T) >= K1 + Delta K2~] = ratio, and the price E[(S - K1 - Delta K2~)^+] + Delta up sc0.
struct ShiftedStrike {
    double delta;
    double price;
};
ShiftedStrike digital_barrier_case2(double s0f, double sig, double t, double k1, double k2_tilde, double up,
                                    double sc0);

/// Vertices of {y in R^dc : y_j <= y_i (1 + l_ij), y_0 = 1} by trying every
/// dc-subset of constraints with a hand-rolled Gaussian elimination.
/// `rates` is row-major (1+dc)^2. Rows are sorted lexicographically.
std::vector<std::vector<double>> section_vertices(int dc, const std::vector<double>& rates);

/// Smallest concave majorant of (x_k, y_k) at the nodes whose right end is a
/// ray of slope `tail`: best chord over all pairs of points, where the point at
/// infinity along slope `tail` counts as a point. O(n^3).
std::vector<double> concave_majorant(const std::vector<double>& x, const std::vector<double>& y, double tail);

}  // namespace oracle
