#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ccdm/sparse_matrix.hpp"

namespace ccdm {

/// Lipschitz constant of the full gradient and of each gradient component.
struct Smoothness {
  double lipschitz = 0.0;
  std::vector<double> coordinate;
};

/// Mutable point with cheap access to single gradient components. Solvers
/// own one per run; it is never shared between threads.
class CoordinateState {
 public:
  virtual ~CoordinateState() = default;

  virtual std::span<const double> point() const = 0;
  /// d f / d x_i at point().
  virtual double partial(std::size_t i) const = 0;
  /// x_i += delta.
  virtual void step(std::size_t i, double delta) = 0;
  /// f at point(), from whatever the state caches.
  virtual double value() const = 0;
};

/// State for accelerated coordinate schemes that couple two sequences x and
/// v through y = tau * v + (1 - tau) * x. Partials are taken at y.
class CoupledState {
 public:
  virtual ~CoupledState() = default;

  virtual std::span<const double> x() const = 0;
  virtual std::span<const double> v() const = 0;
  /// Forms y from the current x and v.
  virtual void couple(double tau) = 0;
  virtual double partial_at_y(std::size_t i) const = 0;
  /// x <- y + delta * e_i.
  virtual void set_x_from_y(std::size_t i, double delta) = 0;
  /// v_i += delta.
  virtual void step_v(std::size_t i, double delta) = 0;
};

class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> g) const = 0;
  virtual Smoothness smoothness() const = 0;
  virtual std::unique_ptr<CoordinateState> coordinate_state(std::span<const double> x) const = 0;
  virtual std::unique_ptr<CoupledState> coupled_state(std::span<const double> x) const = 0;

  /// Work of one coupled (dense) iteration measured in coordinate steps of
  /// average cost. Used by traces to charge accelerated coordinate methods.
  virtual double coupled_step_cost() const { return 1.0; }

  std::vector<double> gradient(std::span<const double> x) const;
};

/// f(x) = gamma * ln sum_j exp(([Ax]_j + r_j) / gamma) + <b, x> + c.
///
/// Values go through the exp-normalize trick, so any finite x is safe.
/// Component constants are max_j A_{ji}^2 / gamma and the full constant is
/// max_j ||A_j||^2 / gamma.
class SoftMaxObjective final : public Objective {
 public:
  /// Empty `r` means zero offsets. Throws InvalidInput on dimension
  /// mismatch, non-finite data or gamma <= 0.
  SoftMaxObjective(SparseMatrix a, std::vector<double> b, double gamma, std::vector<double> r = {}, double c = 0.0);

  const SparseMatrix& matrix() const noexcept { return a_; }
  std::span<const double> offsets() const noexcept { return r_; }
  std::span<const double> linear() const noexcept { return b_; }
  double constant() const noexcept { return c_; }
  double gamma() const noexcept { return gamma_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(a_.rows()); }

  std::size_t dim() const override { return static_cast<std::size_t>(a_.cols()); }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> g) const override;
  using Objective::gradient;
  Smoothness smoothness() const override;
  std::unique_ptr<CoordinateState> coordinate_state(std::span<const double> x) const override;
  std::unique_ptr<CoupledState> coupled_state(std::span<const double> x) const override;
  double coupled_step_cost() const override;

  /// z = Ax + r.
  std::vector<double> scores(std::span<const double> x) const;
  /// Softmax weights of (Ax + r) / gamma, summing to one.
  std::vector<double> weights(std::span<const double> x) const;

 private:
  void check_point(std::span<const double> x) const;

  SparseMatrix a_;
  std::vector<double> r_;
  std::vector<double> b_;
  double c_;
  double gamma_;
};

/// Incrementally maintained SoftMax state giving O(column nonzeros)
/// coordinate partials and steps.
///
/// Keeps z = Ax + r, a shift M, w_j = exp((z_j - M) / gamma) and S = sum w.
/// A step on coordinate i touches only the rows of column i: z_j moves by
/// delta * A_{ji}, w_j is recomputed from z_j and S absorbs the change. The
/// whole state is rebuilt (new M, fresh w and S) every m steps, when an
/// updated z_j climbs more than 500 gamma above M, or when S collapses below
/// 1e-6 of its value at the last rebuild.
class SoftMaxCache final : public CoordinateState {
 public:
  SoftMaxCache(const SoftMaxObjective& f, std::span<const double> x);

  std::span<const double> point() const override { return x_; }
  double partial(std::size_t i) const override;
  void step(std::size_t i, double delta) override;
  double value() const override;

  /// Recompute M, w and S from z.
  void refresh();

  std::span<const double> scores() const noexcept { return z_; }
  std::span<const double> weights() const noexcept { return w_; }
  double weight_sum() const noexcept { return sum_; }
  double shift() const noexcept { return shift_; }
  std::size_t steps_since_refresh() const noexcept { return steps_since_refresh_; }
  std::uint64_t refresh_count() const noexcept { return refreshes_; }

 private:
  const SoftMaxObjective* f_;
  std::vector<double> x_;
  std::vector<double> z_;
  std::vector<double> w_;
  double sum_ = 0.0;
  double sum_at_refresh_ = 0.0;
  double shift_ = 0.0;
  double linear_ = 0.0;  // <b, x>
  std::size_t steps_since_refresh_ = 0;
  std::uint64_t refreshes_ = 0;
};

/// f(x) = 1/2 sum_i d_i (x_i - c_i)^2. Separable test objective with an
/// analytic proximal map; d_i >= 0.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::vector<double> curvature, std::vector<double> center);

  std::span<const double> curvature() const noexcept { return d_; }
  std::span<const double> center() const noexcept { return c_; }

  std::size_t dim() const override { return d_.size(); }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> g) const override;
  using Objective::gradient;
  Smoothness smoothness() const override;
  std::unique_ptr<CoordinateState> coordinate_state(std::span<const double> x) const override;
  std::unique_ptr<CoupledState> coupled_state(std::span<const double> x) const override;

  /// argmin_y f(y) + H/2 ||y - center||^2.
  std::vector<double> prox(std::span<const double> center, double h) const;
  std::vector<double> minimizer() const { return c_; }

 private:
  std::vector<double> d_;
  std::vector<double> c_;
};

/// F(y) = f(y) + H/2 ||y - center||^2; H-strongly convex with component
/// constants H + L_i.
class ProxProblem {
 public:
  ProxProblem(const Objective& f, std::vector<double> center, double h);

  const Objective& objective() const noexcept { return *f_; }
  std::span<const double> center() const noexcept { return center_; }
  double h() const noexcept { return h_; }
  std::size_t dim() const noexcept { return center_.size(); }

  double value(std::span<const double> y) const;
  void gradient(std::span<const double> y, std::span<double> g) const;
  std::vector<double> gradient(std::span<const double> y) const;
  /// Partial of F at state.point(); the quadratic term needs no cache.
  double partial(const CoordinateState& state, std::size_t i) const;
  double value(const CoordinateState& state) const;

 private:
  const Objective* f_;
  std::vector<double> center_;
  double h_;
};

}  // namespace ccdm
