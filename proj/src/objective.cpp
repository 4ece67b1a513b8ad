#include "ccdm/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ccdm/error.hpp"
#include "ccdm/kernels.hpp"

namespace ccdm {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double t) { return std::isfinite(t); });
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Rebuild thresholds for SoftMaxCache.
constexpr double kMaxExponentDrift = 500.0;
constexpr double kSumCollapse = 1e-6;

class SoftMaxCoupledState final : public CoupledState {
 public:
  SoftMaxCoupledState(const SoftMaxObjective& f, std::span<const double> x0)
      : f_(&f),
        x_(x0.begin(), x0.end()),
        v_(x0.begin(), x0.end()),
        y_(x0.begin(), x0.end()),
        zx_(f.scores(x0)),
        zv_(zx_),
        zy_(zx_),
        w_(zx_.size()) {
    lse_ = kernels::parallel::softmax_weights(zy_, f_->gamma(), w_);
  }

  std::span<const double> x() const override { return x_; }
  std::span<const double> v() const override { return v_; }

  void couple(double tau) override {
    for (std::size_t i = 0; i < y_.size(); ++i) y_[i] = tau * v_[i] + (1.0 - tau) * x_[i];
    for (std::size_t j = 0; j < zy_.size(); ++j) zy_[j] = tau * zv_[j] + (1.0 - tau) * zx_[j];
    lse_ = kernels::parallel::softmax_weights(zy_, f_->gamma(), w_);
  }

  double partial_at_y(std::size_t i) const override {
    double s = 0.0;
    for (const Entry& e : f_->matrix().column(static_cast<Index>(i))) {
      s += e.value * w_[static_cast<std::size_t>(e.index)];
    }
    return s / lse_.sum + f_->linear()[i];
  }

  void set_x_from_y(std::size_t i, double delta) override {
    x_ = y_;
    zx_ = zy_;
    x_[i] += delta;
    for (const Entry& e : f_->matrix().column(static_cast<Index>(i))) {
      zx_[static_cast<std::size_t>(e.index)] += delta * e.value;
    }
  }

  void step_v(std::size_t i, double delta) override {
    v_[i] += delta;
    for (const Entry& e : f_->matrix().column(static_cast<Index>(i))) {
      zv_[static_cast<std::size_t>(e.index)] += delta * e.value;
    }
  }

 private:
  const SoftMaxObjective* f_;
  std::vector<double> x_, v_, y_;
  std::vector<double> zx_, zv_, zy_;
  std::vector<double> w_;
  kernels::LseState lse_;
};

class QuadraticState final : public CoordinateState {
 public:
  QuadraticState(const QuadraticObjective& f, std::span<const double> x) : f_(&f), x_(x.begin(), x.end()) {}

  std::span<const double> point() const override { return x_; }
  double partial(std::size_t i) const override { return f_->curvature()[i] * (x_[i] - f_->center()[i]); }
  void step(std::size_t i, double delta) override { x_[i] += delta; }
  double value() const override { return f_->value(x_); }

 private:
  const QuadraticObjective* f_;
  std::vector<double> x_;
};

class QuadraticCoupledState final : public CoupledState {
 public:
  QuadraticCoupledState(const QuadraticObjective& f, std::span<const double> x0)
      : f_(&f), x_(x0.begin(), x0.end()), v_(x_), y_(x_) {}

  std::span<const double> x() const override { return x_; }
  std::span<const double> v() const override { return v_; }
  void couple(double tau) override {
    for (std::size_t i = 0; i < y_.size(); ++i) y_[i] = tau * v_[i] + (1.0 - tau) * x_[i];
  }
  double partial_at_y(std::size_t i) const override { return f_->curvature()[i] * (y_[i] - f_->center()[i]); }
  void set_x_from_y(std::size_t i, double delta) override {
    x_ = y_;
    x_[i] += delta;
  }
  void step_v(std::size_t i, double delta) override { v_[i] += delta; }

 private:
  const QuadraticObjective* f_;
  std::vector<double> x_, v_, y_;
};

}  // namespace

std::vector<double> Objective::gradient(std::span<const double> x) const {
  std::vector<double> g(dim());
  gradient(x, g);
  return g;
}

// --- SoftMaxObjective -------------------------------------------------------

SoftMaxObjective::SoftMaxObjective(SparseMatrix a, std::vector<double> b, double gamma, std::vector<double> r,
                                   double c)
    : a_(std::move(a)), r_(std::move(r)), b_(std::move(b)), c_(c), gamma_(gamma) {
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw InvalidInput("softmax objective: gamma must be positive");
  if (a_.rows() <= 0 || a_.cols() <= 0) throw InvalidInput("softmax objective: empty matrix");
  if (r_.empty()) r_.assign(rows(), 0.0);
  if (b_.size() != dim()) throw InvalidInput("softmax objective: b length must equal the number of columns");
  if (r_.size() != rows()) throw InvalidInput("softmax objective: r length must equal the number of rows");
  if (!all_finite(b_) || !all_finite(r_) || !std::isfinite(c_)) {
    throw InvalidInput("softmax objective: non-finite data");
  }
}

void SoftMaxObjective::check_point(std::span<const double> x) const {
  if (x.size() != dim()) throw InvalidInput("softmax objective: point has wrong length");
  if (!all_finite(x)) throw InvalidInput("softmax objective: non-finite point");
}

std::vector<double> SoftMaxObjective::scores(std::span<const double> x) const {
  check_point(x);
  std::vector<double> z(rows());
  kernels::parallel::spmv(a_, x, r_, z);
  return z;
}

double SoftMaxObjective::value(std::span<const double> x) const {
  const std::vector<double> z = scores(x);
  std::vector<double> w(z.size());
  const kernels::LseState lse = kernels::parallel::softmax_weights(z, gamma_, w);
  return lse.value(gamma_) + dot(b_, x) + c_;
}

std::vector<double> SoftMaxObjective::weights(std::span<const double> x) const {
  const std::vector<double> z = scores(x);
  std::vector<double> w(z.size());
  const kernels::LseState lse = kernels::parallel::softmax_weights(z, gamma_, w);
  for (double& t : w) t /= lse.sum;
  return w;
}

void SoftMaxObjective::gradient(std::span<const double> x, std::span<double> g) const {
  if (g.size() != dim()) throw InvalidInput("softmax objective: gradient buffer has wrong length");
  const std::vector<double> p = weights(x);
  kernels::parallel::spmv_transposed(a_, p, g);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += b_[i];
}

Smoothness SoftMaxObjective::smoothness() const {
  Smoothness s;
  s.lipschitz = a_.row_sqnorm_max() / gamma_;
  s.coordinate = a_.col_sq_max();
  for (double& l : s.coordinate) l /= gamma_;
  return s;
}

std::unique_ptr<CoordinateState> SoftMaxObjective::coordinate_state(std::span<const double> x) const {
  return std::make_unique<SoftMaxCache>(*this, x);
}

std::unique_ptr<CoupledState> SoftMaxObjective::coupled_state(std::span<const double> x) const {
  check_point(x);
  return std::make_unique<SoftMaxCoupledState>(*this, x);
}

double SoftMaxObjective::coupled_step_cost() const {
  // A coupled iteration rewrites y (n entries) and z_y, w (m entries each);
  // one coordinate step touches one column, nnz / n entries on average.
  const double column = std::max(1.0, static_cast<double>(a_.nnz()) / static_cast<double>(dim()));
  return 1.0 + static_cast<double>(dim() + rows()) / column;
}

// --- SoftMaxCache -----------------------------------------------------------

SoftMaxCache::SoftMaxCache(const SoftMaxObjective& f, std::span<const double> x)
    : f_(&f), x_(x.begin(), x.end()), z_(f.scores(x)), w_(z_.size()) {
  linear_ = dot(f.linear(), x_);
  refresh();
}

void SoftMaxCache::refresh() {
  const kernels::LseState lse = kernels::serial::softmax_weights(z_, f_->gamma(), w_);
  shift_ = lse.shift;
  sum_ = lse.sum;
  sum_at_refresh_ = sum_;
  steps_since_refresh_ = 0;
  ++refreshes_;
}

double SoftMaxCache::partial(std::size_t i) const {
  double s = 0.0;
  for (const Entry& e : f_->matrix().column(static_cast<Index>(i))) {
    s += e.value * w_[static_cast<std::size_t>(e.index)];
  }
  return s / sum_ + f_->linear()[i];
}

void SoftMaxCache::step(std::size_t i, double delta) {
  if (delta == 0.0) return;
  x_[i] += delta;
  linear_ += f_->linear()[i] * delta;
  const double gamma = f_->gamma();
  double climb = -std::numeric_limits<double>::infinity();
  double change = 0.0;
  for (const Entry& e : f_->matrix().column(static_cast<Index>(i))) {
    const auto j = static_cast<std::size_t>(e.index);
    z_[j] += delta * e.value;
    const double w = std::exp((z_[j] - shift_) / gamma);
    change += w - w_[j];
    w_[j] = w;
    climb = std::max(climb, z_[j] - shift_);
  }
  sum_ += change;
  ++steps_since_refresh_;
  if (steps_since_refresh_ >= z_.size() || climb > kMaxExponentDrift * gamma ||
      !(sum_ > kSumCollapse * sum_at_refresh_)) {
    refresh();
  }
}

double SoftMaxCache::value() const {
  return shift_ + f_->gamma() * std::log(sum_) + linear_ + f_->constant();
}

// --- QuadraticObjective -----------------------------------------------------

QuadraticObjective::QuadraticObjective(std::vector<double> curvature, std::vector<double> center)
    : d_(std::move(curvature)), c_(std::move(center)) {
  if (d_.empty() || d_.size() != c_.size()) throw InvalidInput("quadratic objective: dimension mismatch");
  if (!all_finite(d_) || !all_finite(c_) ||
      std::any_of(d_.begin(), d_.end(), [](double t) { return t < 0.0; })) {
    throw InvalidInput("quadratic objective: curvature must be finite and nonnegative");
  }
}

double QuadraticObjective::value(std::span<const double> x) const {
  if (x.size() != dim()) throw InvalidInput("quadratic objective: point has wrong length");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += d_[i] * (x[i] - c_[i]) * (x[i] - c_[i]);
  return 0.5 * s;
}

void QuadraticObjective::gradient(std::span<const double> x, std::span<double> g) const {
  if (x.size() != dim() || g.size() != dim()) throw InvalidInput("quadratic objective: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = d_[i] * (x[i] - c_[i]);
}

Smoothness QuadraticObjective::smoothness() const {
  return {*std::max_element(d_.begin(), d_.end()), d_};
}

std::unique_ptr<CoordinateState> QuadraticObjective::coordinate_state(std::span<const double> x) const {
  if (x.size() != dim()) throw InvalidInput("quadratic objective: point has wrong length");
  return std::make_unique<QuadraticState>(*this, x);
}

std::unique_ptr<CoupledState> QuadraticObjective::coupled_state(std::span<const double> x) const {
  if (x.size() != dim()) throw InvalidInput("quadratic objective: point has wrong length");
  return std::make_unique<QuadraticCoupledState>(*this, x);
}

std::vector<double> QuadraticObjective::prox(std::span<const double> center, double h) const {
  std::vector<double> y(dim());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (d_[i] * c_[i] + h * center[i]) / (d_[i] + h);
  return y;
}

// --- ProxProblem ------------------------------------------------------------

ProxProblem::ProxProblem(const Objective& f, std::vector<double> center, double h)
    : f_(&f), center_(std::move(center)), h_(h) {
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw InvalidInput("prox problem: H must be positive");
  if (center_.size() != f.dim()) throw InvalidInput("prox problem: center has wrong length");
}

double ProxProblem::value(std::span<const double> y) const {
  double q = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - center_[i]) * (y[i] - center_[i]);
  return f_->value(y) + 0.5 * h_ * q;
}

void ProxProblem::gradient(std::span<const double> y, std::span<double> g) const {
  f_->gradient(y, g);
  for (std::size_t i = 0; i < y.size(); ++i) g[i] += h_ * (y[i] - center_[i]);
}

std::vector<double> ProxProblem::gradient(std::span<const double> y) const {
  std::vector<double> g(dim());
  gradient(y, g);
  return g;
}

double ProxProblem::partial(const CoordinateState& state, std::size_t i) const {
  return state.partial(i) + h_ * (state.point()[i] - center_[i]);
}

double ProxProblem::value(const CoordinateState& state) const {
  const auto y = state.point();
  double q = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - center_[i]) * (y[i] - center_[i]);
  return state.value() + 0.5 * h_ * q;
}

}  // namespace ccdm
