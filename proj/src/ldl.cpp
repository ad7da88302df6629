#include "ldl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include <Eigen/OrderingMethods>

namespace mttsp::detail {

void QuasiDefiniteLdl::analyze(const Eigen::SparseMatrix<double, Eigen::ColMajor, int>& lower,
                               std::vector<int> signs)
{
    n_ = static_cast<int>(lower.rows());
    if (lower.cols() != n_ || static_cast<int>(signs.size()) != n_)
        throw std::invalid_argument("ldl: dimension mismatch");
    if (!lower.isCompressed())
        throw std::invalid_argument("ldl: matrix must be compressed");

    // Fill-reducing ordering on the symmetric pattern.
    Eigen::SparseMatrix<double, Eigen::ColMajor, int> full =
        lower.selfadjointView<Eigen::Lower>();
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
    Eigen::AMDOrdering<int> amd;
    amd(full, pinv);
    perm_.assign(pinv.indices().data(), pinv.indices().data() + n_);
    inverse_.assign(n_, 0);
    for (int k = 0; k < n_; ++k)
        inverse_[perm_[k]] = k;
    signs_.resize(n_);
    for (int k = 0; k < n_; ++k)
        signs_[k] = signs[perm_[k]];

    // Upper triangle of the permuted matrix.
    const int nnz = static_cast<int>(lower.nonZeros());
    std::vector<std::tuple<int, int, int>> entries;  // (col, row, source slot)
    entries.reserve(nnz);
    for (int j = 0; j < n_; ++j) {
        for (int p = lower.outerIndexPtr()[j]; p < lower.outerIndexPtr()[j + 1]; ++p) {
            const int i = lower.innerIndexPtr()[p];
            const int a = inverse_[i];
            const int b = inverse_[j];
            entries.emplace_back(std::max(a, b), std::min(a, b), p);
        }
    }
    std::sort(entries.begin(), entries.end());
    up_ptr_.assign(n_ + 1, 0);
    up_idx_.resize(nnz);
    up_val_.assign(nnz, 0.0);
    value_map_.resize(nnz);
    for (int q = 0; q < nnz; ++q) {
        const auto [col, row, slot] = entries[q];
        up_ptr_[col + 1]++;
        up_idx_[q] = row;
        value_map_[slot] = q;
    }
    std::partial_sum(up_ptr_.begin(), up_ptr_.end(), up_ptr_.begin());

    // Elimination tree and column counts of L.
    etree_.assign(n_, -1);
    l_nz_.assign(n_, 0);
    std::vector<int> work(n_, -1);
    for (int j = 0; j < n_; ++j) {
        work[j] = j;
        for (int p = up_ptr_[j]; p < up_ptr_[j + 1]; ++p) {
            int i = up_idx_[p];
            while (i != -1 && i < j && work[i] != j) {
                if (etree_[i] == -1)
                    etree_[i] = j;
                l_nz_[i]++;
                work[i] = j;
                i = etree_[i];
            }
        }
    }
    l_ptr_.assign(n_ + 1, 0);
    for (int i = 0; i < n_; ++i)
        l_ptr_[i + 1] = l_ptr_[i] + l_nz_[i];
    l_idx_.assign(l_ptr_.back(), 0);
    l_val_.assign(l_ptr_.back(), 0.0);
    d_.assign(n_, 0.0);
    d_inv_.assign(n_, 0.0);
}

void QuasiDefiniteLdl::factor(const Eigen::SparseMatrix<double, Eigen::ColMajor, int>& lower)
{
    const double* src = lower.valuePtr();
    for (std::size_t k = 0; k < value_map_.size(); ++k)
        up_val_[value_map_[k]] = src[k];

    regularized_ = 0;
    std::vector<double> y(n_, 0.0);
    std::vector<char> marked(n_, 0);
    std::vector<int> y_idx(n_);
    std::vector<int> stack(n_);
    std::vector<int> next_slot(l_ptr_.begin(), l_ptr_.end() - 1);

    const auto finish_pivot = [&](int k) {
        double& d = d_[k];
        const int sign = signs_[k];
        if (sign * d <= pivot_tol) {
            d = sign * dynamic_reg;
            ++regularized_;
        }
        d_inv_[k] = 1.0 / d;
    };

    for (int k = 0; k < n_; ++k) {
        d_[k] = 0.0;
        int y_count = 0;
        for (int p = up_ptr_[k]; p < up_ptr_[k + 1]; ++p) {
            const int row = up_idx_[p];
            if (row == k) {
                d_[k] = up_val_[p];
                continue;
            }
            y[row] = up_val_[p];
            if (marked[row])
                continue;
            // Walk up the elimination tree collecting the reach of `row`.
            int depth = 0;
            int node = row;
            while (node != -1 && node < k && !marked[node]) {
                marked[node] = 1;
                stack[depth++] = node;
                node = etree_[node];
            }
            while (depth > 0)
                y_idx[y_count++] = stack[--depth];
        }
        // Sparse triangular solve in topological order.
        for (int q = y_count - 1; q >= 0; --q) {
            const int col = y_idx[q];
            const double yc = y[col];
            const int end = next_slot[col];
            for (int p = l_ptr_[col]; p < end; ++p)
                y[l_idx_[p]] -= l_val_[p] * yc;
            const double lk = yc * d_inv_[col];
            l_idx_[end] = k;
            l_val_[end] = lk;
            d_[k] -= yc * lk;
            next_slot[col]++;
            y[col] = 0.0;
            marked[col] = 0;
        }
        finish_pivot(k);
    }
}

Eigen::VectorXd QuasiDefiniteLdl::solve(const Eigen::VectorXd& rhs) const
{
    Eigen::VectorXd x(n_);
    for (int k = 0; k < n_; ++k)
        x[k] = rhs[perm_[k]];
    for (int i = 0; i < n_; ++i)
        for (int p = l_ptr_[i]; p < l_ptr_[i + 1]; ++p)
            x[l_idx_[p]] -= l_val_[p] * x[i];
    for (int i = 0; i < n_; ++i)
        x[i] *= d_inv_[i];
    for (int i = n_ - 1; i >= 0; --i)
        for (int p = l_ptr_[i]; p < l_ptr_[i + 1]; ++p)
            x[i] -= l_val_[p] * x[l_idx_[p]];
    Eigen::VectorXd out(n_);
    for (int k = 0; k < n_; ++k)
        out[perm_[k]] = x[k];
    return out;
}

}  // namespace mttsp::detail
