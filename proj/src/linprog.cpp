#include "kdmdp/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kdmdp {

WitnessLp::WitnessLp(Point low, Point high) : dims_(static_cast<int>(low.size())), low_(low.begin(), low.end()), high_(high.begin(), high.end()) {
    if (low.size() != high.size() || low.empty()) throw DomainError("WitnessLp: bad box dimension");
    for (std::size_t i = 0; i < low.size(); ++i)
        if (!(std::isfinite(low[i]) && std::isfinite(high[i]) && low[i] < high[i]))
            throw DomainError("WitnessLp: requires finite low < high in every dimension");
}

void WitnessLp::add_row(Point gradient, double offset) {
    if (static_cast<int>(gradient.size()) != dims_) throw DomainError("WitnessLp: gradient dimension mismatch");
    for (double g : gradient)
        if (!std::isfinite(g)) throw DomainError("WitnessLp: non-finite gradient");
    if (!std::isfinite(offset)) throw DomainError("WitnessLp: non-finite offset");
    data_.insert(data_.end(), gradient.begin(), gradient.end());
    data_.push_back(offset);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Variables: shifted box coordinates y_j = x_j - low_j in [0, u_j] (j < d),
// the shifted margin t = m - m0 in [0, inf) (j = d), one slack per row.
// Row k:  t - g_k . y + s_k = b_k - m0,  b_k = c_k + g_k . low,  m0 = min_k b_k,
// so the all-slack basis is feasible with every right-hand side >= 0.
class BoundedSimplex {
public:
    explicit BoundedSimplex(const WitnessLp& lp) : d_(lp.dims()), rows_(lp.rows()), cols_(static_cast<std::size_t>(d_) + 1 + rows_) {
        tab_.assign(rows_ * cols_, 0.0);
        val_.assign(cols_, 0.0);
        upper_.assign(cols_, kInf);
        at_upper_.assign(cols_, false);
        basis_.resize(rows_);
        is_basic_.assign(cols_, false);

        std::vector<double> b(rows_);
        m0_ = kInf;
        for (std::size_t k = 0; k < rows_; ++k) {
            const Point g = lp.gradient(k);
            double bk = lp.offset(k);
            for (int j = 0; j < d_; ++j) bk += g[j] * lp.low()[j];
            b[k] = bk;
            m0_ = std::min(m0_, bk);
        }
        for (int j = 0; j < d_; ++j) upper_[j] = lp.high()[j] - lp.low()[j];
        for (std::size_t k = 0; k < rows_; ++k) {
            double* row = &tab_[k * cols_];
            const Point g = lp.gradient(k);
            for (int j = 0; j < d_; ++j) row[j] = -g[j];
            row[d_] = 1.0;
            const std::size_t slack = static_cast<std::size_t>(d_) + 1 + k;
            row[slack] = 1.0;
            basis_[k] = slack;
            is_basic_[slack] = true;
            val_[slack] = b[k] - m0_;
        }
        // Reduced costs of  max t  with the slack basis (objective of slacks = 0).
        obj_.assign(cols_, 0.0);
        obj_[d_] = 1.0;
    }

    LpStatus run(int& iterations) {
        for (iterations = 0; iterations < kMaxSimplexIterations; ++iterations) {
            // Bland: lowest-index improving nonbasic variable.
            std::size_t enter = cols_;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (is_basic_[j]) continue;
                if ((!at_upper_[j] && obj_[j] > kPivotTol) || (at_upper_[j] && obj_[j] < -kPivotTol)) {
                    enter = j;
                    break;
                }
            }
            if (enter == cols_) return LpStatus::optimal;
            const double dir = at_upper_[enter] ? -1.0 : 1.0;

            double best = kInf;
            std::size_t leave_row = rows_;
            bool leave_to_upper = false;
            for (std::size_t k = 0; k < rows_; ++k) {
                const double alpha = tab_[k * cols_ + enter];
                if (std::abs(alpha) <= kPivotTol) continue;
                const double rate = -alpha * dir;
                const std::size_t bv = basis_[k];
                double theta;
                bool to_upper;
                if (rate < 0.0) {
                    theta = std::max(0.0, val_[bv]) / -rate;
                    to_upper = false;
                } else {
                    if (upper_[bv] == kInf) continue;
                    theta = std::max(0.0, upper_[bv] - val_[bv]) / rate;
                    to_upper = true;
                }
                if (theta < best || (theta == best && leave_row < rows_ && bv < basis_[leave_row])) {
                    best = theta;
                    leave_row = k;
                    leave_to_upper = to_upper;
                }
            }
            const double flip = upper_[enter];
            if (flip == kInf && leave_row == rows_) return LpStatus::unbounded_guard;

            if (flip <= best) {
                step(enter, flip * dir);
                at_upper_[enter] = !at_upper_[enter];
                val_[enter] = at_upper_[enter] ? upper_[enter] : 0.0;
                continue;
            }
            step(enter, best * dir);
            const std::size_t leaving = basis_[leave_row];
            val_[leaving] = leave_to_upper ? upper_[leaving] : 0.0;
            at_upper_[leaving] = leave_to_upper;
            pivot(leave_row, enter);
        }
        throw NumericalError("solve_witness: simplex iteration limit exceeded");
    }

    double m0() const noexcept { return m0_; }
    double value(std::size_t j) const noexcept { return val_[j]; }

private:
    void step(std::size_t enter, double delta) {
        val_[enter] += delta;
        for (std::size_t k = 0; k < rows_; ++k) val_[basis_[k]] -= tab_[k * cols_ + enter] * delta;
    }

    void pivot(std::size_t r, std::size_t c) {
        double* prow = &tab_[r * cols_];
        const double inv = 1.0 / prow[c];
        for (std::size_t j = 0; j < cols_; ++j) prow[j] *= inv;
        prow[c] = 1.0;
        for (std::size_t k = 0; k < rows_; ++k) {
            if (k == r) continue;
            double* row = &tab_[k * cols_];
            const double f = row[c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols_; ++j) row[j] -= f * prow[j];
            row[c] = 0.0;
        }
        const double f = obj_[c];
        if (f != 0.0) {
            for (std::size_t j = 0; j < cols_; ++j) obj_[j] -= f * prow[j];
            obj_[c] = 0.0;
        }
        is_basic_[basis_[r]] = false;
        basis_[r] = c;
        is_basic_[c] = true;
        at_upper_[c] = false;
    }

    int d_;
    std::size_t rows_, cols_;
    double m0_ = 0.0;
    std::vector<double> tab_, val_, upper_, obj_;
    std::vector<bool> at_upper_, is_basic_;
    std::vector<std::size_t> basis_;
};

} // namespace

WitnessSolution solve_witness(const WitnessLp& lp) {
    if (lp.rows() == 0) throw DomainError("solve_witness: at least one constraint row is required");
    BoundedSimplex simplex(lp);
    WitnessSolution sol;
    sol.status = simplex.run(sol.iterations);
    if (sol.status != LpStatus::optimal) return sol;

    const int d = lp.dims();
    sol.point.resize(d);
    for (int j = 0; j < d; ++j) {
        const double width = lp.high()[j] - lp.low()[j];
        const double y = simplex.value(static_cast<std::size_t>(j));
        if (y < -1e-9 || y > width + 1e-9)
            throw NumericalError("solve_witness: witness point leaves the box along dimension " + std::to_string(j));
        sol.point[j] = std::clamp(lp.low()[j] + std::clamp(y, 0.0, width), lp.low()[j], lp.high()[j]);
    }
    double margin = kInf;
    for (std::size_t k = 0; k < lp.rows(); ++k) {
        const Point g = lp.gradient(k);
        double v = lp.offset(k);
        for (int j = 0; j < d; ++j) v += g[j] * sol.point[j];
        margin = std::min(margin, v);
    }
    const double tableau_margin = simplex.m0() + simplex.value(static_cast<std::size_t>(d));
    if (margin < tableau_margin - 1e-9 * std::max(1.0, std::abs(tableau_margin)))
        throw NumericalError("solve_witness: returned point violates a constraint");
    sol.margin = margin;
    return sol;
}

} // namespace kdmdp
