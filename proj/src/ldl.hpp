#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mttsp::detail {

/// LDL' factorisation of a quasi-definite matrix with known pivot signs.
/// Pivots whose sign disagrees with the expected one (or that are too small)
/// are replaced by sign * dynamic_reg; callers recover accuracy through
/// iterative refinement against the unregularised operator.
///
/// Usage: analyze() once per sparsity pattern, factor() per value update.
class QuasiDefiniteLdl {
public:
    /// `lower` holds the lower triangle (diagonal included) of a symmetric
    /// matrix; `signs[i]` is +1 or -1.
    void analyze(const Eigen::SparseMatrix<double, Eigen::ColMajor, int>& lower,
                 std::vector<int> signs);
    void factor(const Eigen::SparseMatrix<double, Eigen::ColMajor, int>& lower);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

    int regularized_pivots() const { return regularized_; }

    double pivot_tol = 1e-13;
    double dynamic_reg = 2e-7;

private:
    int n_ = 0;
    std::vector<int> perm_;      // perm_[new] = old
    std::vector<int> inverse_;   // inverse_[old] = new
    std::vector<int> signs_;     // in permuted order

    // Upper triangle of P A P' in CSC, plus a map from the caller's lower
    // value slots to positions in it.
    std::vector<int> up_ptr_, up_idx_;
    std::vector<double> up_val_;
    std::vector<int> value_map_;

    std::vector<int> etree_, l_nz_;
    std::vector<int> l_ptr_, l_idx_;
    std::vector<double> l_val_, d_, d_inv_;
    int regularized_ = 0;
};

}  // namespace mttsp::detail
