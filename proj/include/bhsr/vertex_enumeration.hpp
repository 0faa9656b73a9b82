#pragma once

#include <vector>

#include <Eigen/Dense>

namespace bhsr::polytope {

/// Bounded polytope {y : A y <= b}.
struct HRep {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    int dim() const { return static_cast<int>(a.cols()); }
};

/// Every basic feasible point: solve each dim-subset of rows as equalities,
/// keep the feasible solutions. Cost is C(m, dim) solves, so small dims only.
std::vector<Eigen::VectorXd> enumerate_bases(const HRep& h, double feas_tol = 1e-12,
                                             double dedup_tol = 1e-10);

/// Double description: starts from the axis-aligned box given by the
/// single-variable rows of `h` and cuts it by the remaining rows one at a
/// time. New vertices are created on edges between a kept and a discarded
/// vertex; edges are identified combinatorially (two vertices are adjacent iff
/// no third vertex is tight on every row they share). Throws NumericError if
/// the single-variable rows do not bound every coordinate.
std::vector<Eigen::VectorXd> enumerate_double_description(const HRep& h, double feas_tol = 1e-12,
                                                          double dedup_tol = 1e-10);

/// Sorts lexicographically and merges points closer than `tol` in every coordinate.
std::vector<Eigen::VectorXd> dedup_sorted(std::vector<Eigen::VectorXd> pts, double tol);

}  // namespace bhsr::polytope
