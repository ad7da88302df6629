// Primal-dual interior-point solver for ConicProgram.
//
// The program  min c'x  s.t.  Ax = b,  x in K  is handled in the split form
//     min c'x  s.t.  Ax = b,  Gx + s = h,  s in K_c
// with G = -(selection of the cone-constrained columns) and h = 0, so that
// free columns need no special treatment. Iterates follow the homogeneous
// self-dual embedding (x, y, z, s, tau, kappa); each iteration factors one
// quasi-definite KKT matrix and solves it three times (constant right-hand
// side, predictor, corrector).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ldl.hpp"
#include "mttsp/conic.hpp"

namespace mttsp {

namespace {

constexpr double kStaticReg = 7e-8;
constexpr int kMaxRefine = 8;
constexpr double kStepFraction = 0.99;

struct Cone {
    bool soc = false;
    int offset = 0;
    int size = 0;
};

// Nesterov-Todd scaling of one cone.
struct ConeScaling {
    double eta = 1.0;
    Eigen::VectorXd w;  // orthant: sqrt(s/z); soc: normalised w-bar with w0^2 - |w1|^2 = 1
};

double soc_det(const Eigen::Ref<const Eigen::VectorXd>& u)
{
    const double tail = u.tail(u.size() - 1).norm();
    return (u[0] - tail) * (u[0] + tail);
}

class InteriorPoint {
public:
    InteriorPoint(const ConicProgram& program, const SolverSettings& settings)
        : program_(program), settings_(settings)
    {
        n_ = program.num_variables();
        m_ = program.num_constraints();
        Eigen::Index offset = 0;
        int row = 0;
        for (const ConeBlock& block : program.cones) {
            if (block.kind == ConeKind::nonneg) {
                cones_.push_back({false, row, block.size});
                degree_ += block.size;
            } else if (block.kind == ConeKind::soc) {
                cones_.push_back({true, row, block.size});
                degree_ += 1;
            }
            if (block.kind != ConeKind::free) {
                for (int k = 0; k < block.size; ++k)
                    column_of_.push_back(static_cast<int>(offset) + k);
                row += block.size;
            }
            offset += block.size;
        }
        p_ = row;
        scaling_.resize(cones_.size());
        b_norm_ = m_ > 0 ? program.rhs.lpNorm<Eigen::Infinity>() : 0.0;
        c_norm_ = n_ > 0 ? program.objective.lpNorm<Eigen::Infinity>() : 0.0;
    }

    SolveResult run();

private:
    // --- linear maps ------------------------------------------------------
    Eigen::VectorXd G(const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd out(p_);
        for (int r = 0; r < p_; ++r)
            out[r] = -x[column_of_[static_cast<std::size_t>(r)]];
        return out;
    }

    Eigen::VectorXd Gt(const Eigen::VectorXd& z) const
    {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
        for (int r = 0; r < p_; ++r)
            out[column_of_[static_cast<std::size_t>(r)]] -= z[r];
        return out;
    }

    // --- cone algebra -------------------------------------------------------
    void compute_scaling()
    {
        for (std::size_t k = 0; k < cones_.size(); ++k) {
            const Cone& cone = cones_[k];
            const auto s = s_.segment(cone.offset, cone.size);
            const auto z = z_.segment(cone.offset, cone.size);
            ConeScaling& sc = scaling_[k];
            if (!cone.soc) {
                sc.w = (s.array() / z.array()).sqrt().matrix();
                continue;
            }
            const double s_norm = std::sqrt(soc_det(s));
            const double z_norm = std::sqrt(soc_det(z));
            const Eigen::VectorXd sb = s / s_norm;
            const Eigen::VectorXd zb = z / z_norm;
            const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            sc.w.resize(cone.size);
            sc.w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
            sc.w.tail(cone.size - 1) =
                (sb.tail(cone.size - 1) - zb.tail(cone.size - 1)) / (2.0 * gamma);
            sc.eta = std::sqrt(s_norm / z_norm);
        }
        lambda_ = apply_w(z_);
    }

    Eigen::VectorXd apply_w(const Eigen::VectorXd& u, bool inverse = false) const
    {
        Eigen::VectorXd out(p_);
        for (std::size_t k = 0; k < cones_.size(); ++k) {
            const Cone& cone = cones_[k];
            const ConeScaling& sc = scaling_[k];
            const auto in = u.segment(cone.offset, cone.size);
            auto res = out.segment(cone.offset, cone.size);
            if (!cone.soc) {
                if (inverse)
                    res = (in.array() / sc.w.array()).matrix();
                else
                    res = (in.array() * sc.w.array()).matrix();
                continue;
            }
            const double w0 = sc.w[0];
            const auto w1 = sc.w.tail(cone.size - 1);
            const auto u1 = in.tail(cone.size - 1);
            const double sign = inverse ? -1.0 : 1.0;
            const double scale = inverse ? 1.0 / sc.eta : sc.eta;
            const double w1u1 = w1.dot(u1);
            res[0] = scale * (w0 * in[0] + sign * w1u1);
            res.tail(cone.size - 1) =
                scale * (u1 + (sign * in[0] + w1u1 / (1.0 + w0)) * w1);
        }
        return out;
    }

    Eigen::VectorXd jordan_product(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const
    {
        Eigen::VectorXd out(p_);
        for (const Cone& cone : cones_) {
            const auto u = a.segment(cone.offset, cone.size);
            const auto v = b.segment(cone.offset, cone.size);
            auto res = out.segment(cone.offset, cone.size);
            if (!cone.soc) {
                res = (u.array() * v.array()).matrix();
                continue;
            }
            res[0] = u.dot(v);
            res.tail(cone.size - 1) = u[0] * v.tail(cone.size - 1) + v[0] * u.tail(cone.size - 1);
        }
        return out;
    }

    // w such that lambda o w = d
    Eigen::VectorXd jordan_divide(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const
    {
        Eigen::VectorXd out(p_);
        for (const Cone& cone : cones_) {
            const auto l = lambda.segment(cone.offset, cone.size);
            const auto v = d.segment(cone.offset, cone.size);
            auto res = out.segment(cone.offset, cone.size);
            if (!cone.soc) {
                res = (v.array() / l.array()).matrix();
                continue;
            }
            const auto l1 = l.tail(cone.size - 1);
            const auto v1 = v.tail(cone.size - 1);
            const double det = soc_det(l);
            const double w0 = (l[0] * v[0] - l1.dot(v1)) / det;
            res[0] = w0;
            res.tail(cone.size - 1) = (v1 - w0 * l1) / l[0];
        }
        return out;
    }

    Eigen::VectorXd identity_element() const
    {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(p_);
        for (const Cone& cone : cones_) {
            if (cone.soc)
                e[cone.offset] = 1.0;
            else
                e.segment(cone.offset, cone.size).setOnes();
        }
        return e;
    }

    // Largest alpha with u + alpha * du in the cone (capped at `cap`).
    double max_step(const Eigen::VectorXd& u, const Eigen::VectorXd& du, double cap) const
    {
        double alpha = cap;
        for (const Cone& cone : cones_) {
            const auto x = u.segment(cone.offset, cone.size);
            const auto d = du.segment(cone.offset, cone.size);
            if (!cone.soc) {
                for (int i = 0; i < cone.size; ++i)
                    if (d[i] < 0.0)
                        alpha = std::min(alpha, -x[i] / d[i]);
                continue;
            }
            const auto x1 = x.tail(cone.size - 1);
            const auto d1 = d.tail(cone.size - 1);
            const double qa = d[0] * d[0] - d1.squaredNorm();
            const double qb = 2.0 * (x[0] * d[0] - x1.dot(d1));
            const double qc = std::max(soc_det(x), 0.0);
            double root = std::numeric_limits<double>::infinity();
            if (std::abs(qa) <= 1e-14 * (d.squaredNorm() + 1e-300)) {
                if (qb < 0.0)
                    root = -qc / qb;
            } else {
                const double disc = qb * qb - 4.0 * qa * qc;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    const double q = -0.5 * (qb + std::copysign(sq, qb));
                    double r1 = q / qa;
                    double r2 = q != 0.0 ? qc / q : std::numeric_limits<double>::infinity();
                    if (r1 > r2)
                        std::swap(r1, r2);
                    if (r1 > 0.0)
                        root = r1;
                    else if (r2 > 0.0)
                        root = r2;
                }
            }
            if (d[0] < 0.0)
                root = std::min(root, -x[0] / d[0]);
            alpha = std::min(alpha, root);
        }
        return std::max(alpha, 0.0);
    }

    // Smallest Jordan eigenvalue.
    double min_eigenvalue(const Eigen::VectorXd& u) const
    {
        double lo = std::numeric_limits<double>::infinity();
        for (const Cone& cone : cones_) {
            const auto x = u.segment(cone.offset, cone.size);
            lo = std::min(lo, cone.soc ? x[0] - x.tail(cone.size - 1).norm() : x.minCoeff());
        }
        return lo;
    }

    // Push u into the interior: u + (1 + max(0, -min eig)) e when needed.
    void shift_into_cone(Eigen::VectorXd& u) const
    {
        if (p_ == 0)
            return;
        const double alpha = -min_eigenvalue(u);
        if (alpha >= 0.0)
            u += (1.0 + alpha) * identity_element();
    }

    // --- KKT -----------------------------------------------------------------
    void assemble_kkt_pattern();
    void update_kkt_values(bool identity_scaling);
    bool factor();
    Eigen::VectorXd kkt_multiply(const Eigen::VectorXd& v, bool identity_scaling) const;
    Eigen::VectorXd kkt_solve(const Eigen::VectorXd& rhs, bool identity_scaling) const;

    Eigen::VectorXd stack(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& z) const
    {
        Eigen::VectorXd out(n_ + m_ + p_);
        out << x, y, z;
        return out;
    }

    SolveResult finish(SolveStatus status, int iterations);

    const ConicProgram& program_;
    const SolverSettings& settings_;
    int n_ = 0;
    int m_ = 0;
    int p_ = 0;
    int degree_ = 0;
    double b_norm_ = 0.0;
    double c_norm_ = 0.0;
    std::vector<Cone> cones_;
    std::vector<int> column_of_;
    std::vector<ConeScaling> scaling_;

    Eigen::VectorXd x_, y_, z_, s_, lambda_;
    double tau_ = 1.0;
    double kappa_ = 1.0;

    SparseMatrix kkt_;
    std::vector<int> zblock_slots_;  // value indices of the -W^2 entries, cone by cone
    detail::QuasiDefiniteLdl ldlt_;

    Residuals last_;
    std::chrono::steady_clock::time_point start_;
};

void InteriorPoint::assemble_kkt_pattern()
{
    const int N = n_ + m_ + p_;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(N + program_.equalities.nonZeros() + 3 * p_));
    for (int j = 0; j < n_; ++j)
        triplets.emplace_back(j, j, kStaticReg);
    for (int j = 0; j < n_; ++j)
        for (SparseMatrix::InnerIterator it(program_.equalities, j); it; ++it)
            triplets.emplace_back(n_ + static_cast<int>(it.row()), j, it.value());
    for (int i = 0; i < m_; ++i)
        triplets.emplace_back(n_ + i, n_ + i, -kStaticReg);
    for (int r = 0; r < p_; ++r)
        triplets.emplace_back(n_ + m_ + r, column_of_[static_cast<std::size_t>(r)], -1.0);
    for (const Cone& cone : cones_) {
        const int base = n_ + m_ + cone.offset;
        if (!cone.soc) {
            for (int i = 0; i < cone.size; ++i)
                triplets.emplace_back(base + i, base + i, -1.0);
            continue;
        }
        for (int col = 0; col < cone.size; ++col)
            for (int row = col; row < cone.size; ++row)
                triplets.emplace_back(base + row, base + col, row == col ? -1.0 : 0.0);
    }
    kkt_.resize(N, N);
    kkt_.setFromTriplets(triplets.begin(), triplets.end());
    kkt_.makeCompressed();

    // Locate the z-block entries so later updates write values in place.
    const auto slot = [&](int row, int col) {
        const int* outer = kkt_.outerIndexPtr();
        const int* inner = kkt_.innerIndexPtr();
        const int* first = inner + outer[col];
        const int* last = inner + outer[col + 1];
        const int* hit = std::lower_bound(first, last, row);
        return static_cast<int>(hit - inner);
    };
    zblock_slots_.clear();
    for (const Cone& cone : cones_) {
        const int base = n_ + m_ + cone.offset;
        if (!cone.soc) {
            for (int i = 0; i < cone.size; ++i)
                zblock_slots_.push_back(slot(base + i, base + i));
            continue;
        }
        for (int col = 0; col < cone.size; ++col)
            for (int row = col; row < cone.size; ++row)
                zblock_slots_.push_back(slot(base + row, base + col));
    }
    std::vector<int> signs(N, -1);
    std::fill(signs.begin(), signs.begin() + n_, 1);
    ldlt_.analyze(kkt_, std::move(signs));
}

void InteriorPoint::update_kkt_values(bool identity_scaling)
{
    double* values = kkt_.valuePtr();
    std::size_t next = 0;
    for (std::size_t k = 0; k < cones_.size(); ++k) {
        const Cone& cone = cones_[k];
        const ConeScaling& sc = scaling_[k];
        if (!cone.soc) {
            for (int i = 0; i < cone.size; ++i) {
                const double w2 = identity_scaling ? 1.0 : sc.w[i] * sc.w[i];
                values[zblock_slots_[next++]] = -w2 - kStaticReg;
            }
            continue;
        }
        // W^2 = eta^2 (2 w w' - J)
        for (int col = 0; col < cone.size; ++col) {
            for (int row = col; row < cone.size; ++row) {
                double w2;
                if (identity_scaling) {
                    w2 = row == col ? 1.0 : 0.0;
                } else {
                    const double j = row == col ? (row == 0 ? 1.0 : -1.0) : 0.0;
                    w2 = sc.eta * sc.eta * (2.0 * sc.w[row] * sc.w[col] - j);
                }
                values[zblock_slots_[next++]] = -w2 - (row == col ? kStaticReg : 0.0);
            }
        }
    }
}

bool InteriorPoint::factor()
{
    ldlt_.factor(kkt_);
    return true;
}

Eigen::VectorXd InteriorPoint::kkt_multiply(const Eigen::VectorXd& v, bool identity_scaling) const
{
    const Eigen::VectorXd vx = v.head(n_);
    const Eigen::VectorXd vy = v.segment(n_, m_);
    const Eigen::VectorXd vz = v.tail(p_);
    Eigen::VectorXd wz = identity_scaling ? vz : apply_w(apply_w(vz));
    return stack(program_.equalities.transpose() * vy + Gt(vz), program_.equalities * vx,
                 G(vx) - wz);
}

Eigen::VectorXd InteriorPoint::kkt_solve(const Eigen::VectorXd& rhs, bool identity_scaling) const
{
    Eigen::VectorXd sol = ldlt_.solve(rhs);
    const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kMaxRefine; ++k) {
        const Eigen::VectorXd residual = rhs - kkt_multiply(sol, identity_scaling);
        const double norm = residual.lpNorm<Eigen::Infinity>();
        if (norm <= target || norm >= 0.5 * previous)
            break;
        previous = norm;
        sol += ldlt_.solve(residual);
    }
    return sol;
}

SolveResult InteriorPoint::finish(SolveStatus status, int iterations)
{
    SolveResult result;
    result.status = status;
    result.iterations = iterations;
    result.residuals = last_;
    result.solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();

    if (status == SolveStatus::infeasible) {
        // Farkas ray for the primal: y with -A'y in K*, b'y > 0 (unnormalised).
        result.dual = -y_;
        result.dual_slack = -Gt(z_);
        result.primal = Eigen::VectorXd::Zero(n_);
        return result;
    }
    if (status == SolveStatus::unbounded) {
        result.primal = x_;
        result.dual = Eigen::VectorXd::Zero(m_);
        result.dual_slack = Eigen::VectorXd::Zero(n_);
        return result;
    }
    result.primal = x_ / tau_;
    result.dual = -y_ / tau_;
    result.dual_slack = -Gt(z_) / tau_;
    result.objective_value = program_.objective.dot(result.primal) + program_.objective_offset;
    return result;
}

SolveResult InteriorPoint::run()
{
    start_ = std::chrono::steady_clock::now();
    const Eigen::VectorXd& c = program_.objective;
    const Eigen::VectorXd& b = program_.rhs;
    const Eigen::VectorXd h = Eigen::VectorXd::Zero(p_);
    const SparseMatrix& A = program_.equalities;

    assemble_kkt_pattern();

    // Initial point from two least-squares solves with identity scaling.
    update_kkt_values(true);
    if (!factor())
        return finish(SolveStatus::iteration_limit, 0);
    {
        const Eigen::VectorXd primal = kkt_solve(stack(Eigen::VectorXd::Zero(n_), b, h), true);
        x_ = primal.head(n_);
        s_ = -primal.tail(p_);
        shift_into_cone(s_);

        const Eigen::VectorXd dual = kkt_solve(stack(-c, Eigen::VectorXd::Zero(m_), Eigen::VectorXd::Zero(p_)), true);
        y_ = dual.segment(n_, m_);
        z_ = dual.tail(p_);
        shift_into_cone(z_);
    }
    tau_ = 1.0;
    kappa_ = 1.0;

    const Eigen::VectorXd e = identity_element();
    const double tol = settings_.tol;

    for (int iter = 0;; ++iter) {
        // Residuals of the embedding.
        const Eigen::VectorXd Gx = G(x_);
        const Eigen::VectorXd Gtz = Gt(z_);
        const Eigen::VectorXd Aty = A.transpose() * y_;
        const Eigen::VectorXd Ax = A * x_;
        const Eigen::VectorXd rx = Aty + Gtz + c * tau_;
        const Eigen::VectorXd ry = -Ax + b * tau_;
        const Eigen::VectorXd rz = s_ + Gx - h * tau_;
        const double cx = c.dot(x_);
        const double by = b.dot(y_);
        const double hz = h.dot(z_);
        const double rtau = kappa_ + cx + by + hz;

        const auto inf = [](const Eigen::VectorXd& v) {
            return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
        };
        const double pcost = cx / tau_;
        const double dcost = -(by + hz) / tau_;
        last_.primal = std::max(inf(ry), inf(rz)) / tau_ / (1.0 + b_norm_);
        last_.dual = inf(rx) / tau_ / (1.0 + c_norm_);
        last_.gap = std::abs(pcost - dcost) / (1.0 + std::abs(pcost) + std::abs(dcost));

        if (settings_.verbose)
            std::fprintf(stderr, "ipm %3d  pcost % .10e  dcost % .10e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kappa %.2e\n",
                         iter, pcost, dcost, last_.primal, last_.dual, last_.gap, tau_, kappa_);

        if (last_.primal <= tol && last_.dual <= tol && last_.gap <= tol)
            return finish(SolveStatus::optimal, iter);

        if (by + hz < 0.0) {
            const double farkas = inf(Aty + Gtz) / -(by + hz);
            if (farkas <= settings_.infeasibility_tol)
                return finish(SolveStatus::infeasible, iter);
        }
        if (cx < 0.0) {
            const double ray = std::max(inf(Ax), inf(Gx + s_)) / -cx;
            if (ray <= settings_.infeasibility_tol)
                return finish(SolveStatus::unbounded, iter);
        }
        if (iter >= settings_.max_iters)
            return finish(SolveStatus::iteration_limit, iter);
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (elapsed > settings_.time_budget)
            return finish(SolveStatus::time_limit, iter);

        compute_scaling();
        update_kkt_values(false);
        if (!factor())
            return finish(SolveStatus::iteration_limit, iter);

        const double mu = (s_.dot(z_) + tau_ * kappa_) / (degree_ + 1);

        // Direction for the tau coupling: K v = [-c; b; h].
        const Eigen::VectorXd v = kkt_solve(stack(-c, b, h), false);
        const Eigen::VectorXd vx = v.head(n_);
        const Eigen::VectorXd vy = v.segment(n_, m_);
        const Eigen::VectorXd vz = v.tail(p_);
        const double v_dot = c.dot(vx) + b.dot(vy) + h.dot(vz) - kappa_ / tau_;

        struct Step {
            Eigen::VectorXd dx, dy, dz, ds;
            double dtau = 0.0;
            double dkappa = 0.0;
        };

        const auto direction = [&](double keep, const Eigen::VectorXd& ds_rhs, double dkappa_rhs) {
            const Eigen::VectorXd w_div = apply_w(jordan_divide(lambda_, ds_rhs));
            const Eigen::VectorXd u =
                kkt_solve(stack(-keep * rx, keep * ry, -keep * rz - w_div), false);
            const Eigen::VectorXd ux = u.head(n_);
            const Eigen::VectorXd uy = u.segment(n_, m_);
            const Eigen::VectorXd uz = u.tail(p_);
            Step step;
            step.dtau = (-keep * rtau - dkappa_rhs / tau_ - c.dot(ux) - b.dot(uy) - h.dot(uz)) / v_dot;
            step.dx = ux + step.dtau * vx;
            step.dy = uy + step.dtau * vy;
            step.dz = uz + step.dtau * vz;
            step.dkappa = (dkappa_rhs - kappa_ * step.dtau) / tau_;
            // ds = W (lambda \ d_s - W dz)
            step.ds = apply_w(jordan_divide(lambda_, ds_rhs) - apply_w(step.dz));
            return step;
        };

        const auto step_length = [&](const Step& step) {
            double alpha = 1.0 / kStepFraction;
            alpha = max_step(s_, step.ds, alpha);
            alpha = max_step(z_, step.dz, alpha);
            if (step.dtau < 0.0)
                alpha = std::min(alpha, -tau_ / step.dtau);
            if (step.dkappa < 0.0)
                alpha = std::min(alpha, -kappa_ / step.dkappa);
            return alpha;
        };

        // Predictor.
        const Eigen::VectorXd lambda_sq = jordan_product(lambda_, lambda_);
        const Step affine = direction(1.0, -lambda_sq, -tau_ * kappa_);
        const double alpha_aff = std::min(1.0, step_length(affine));
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

        // Corrector.
        const Eigen::VectorXd second_order =
            jordan_product(apply_w(affine.ds, true), apply_w(affine.dz));
        const Eigen::VectorXd ds_rhs = -lambda_sq - second_order + sigma * mu * e;
        const double dkappa_rhs = -tau_ * kappa_ - affine.dtau * affine.dkappa + sigma * mu;
        const Step combined = direction(1.0 - sigma, ds_rhs, dkappa_rhs);
        const double alpha = std::min(1.0, kStepFraction * step_length(combined));

        x_ += alpha * combined.dx;
        y_ += alpha * combined.dy;
        z_ += alpha * combined.dz;
        s_ += alpha * combined.ds;
        tau_ += alpha * combined.dtau;
        kappa_ += alpha * combined.dkappa;
    }
}

}  // namespace

SolveResult solve(const ConicProgram& program, const SolverSettings& settings)
{
    program.check();
    InteriorPoint ipm(program, settings);
    SolveResult result = ipm.run();
    if (settings.observer)
        settings.observer(program, result);
    return result;
}

}  // namespace mttsp
