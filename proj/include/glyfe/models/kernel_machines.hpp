#pragma once

#include <cstddef>
#include <list>
#include <unordered_map>
#include <vector>

#include "glyfe/models/model.hpp"

namespace glyfe::models {

// Rows of the RBF Gram matrix of one training set. Holds the full matrix
// when it fits in the byte budget, otherwise an LRU set of rows.
class RbfRowCache {
 public:
  RbfRowCache(const RowMatrix& x, double gamma, double budget_mb);
  const double* row(Eigen::Index i);
  Eigen::Index size() const { return x_.rows(); }

 private:
  const RowMatrix& x_;
  double gamma_;
  bool full_ = false;
  RowMatrix gram_;
  std::size_t max_rows_ = 0;
  std::list<std::pair<Eigen::Index, std::vector<double>>> lru_;
  std::unordered_map<Eigen::Index, decltype(lru_)::iterator> index_;
};

struct SvrSolution {
  Eigen::VectorXd beta;  // alpha+ - alpha-, per training sample
  double bias = 0.0;     // f(x) = sum beta_i K(x_i, x) + bias
  double objective = 0.0;  // 1/2 b'Kb + eps |b|_1 - y'b at the solution
  std::size_t iterations = 0;
  bool converged = false;
};

// Epsilon-insensitive SVR dual solved by SMO with second-order working set
// selection; stops when the maximal KKT violation drops below tolerance.
SvrSolution solve_svr_dual(const RowMatrix& x, const Eigen::VectorXd& y, double gamma, double c,
                           double epsilon, double tolerance, std::size_t max_iterations,
                           double cache_mb = 512);

class SvrModel final : public Predictor {
 public:
  SvrModel(double tolerance = 1e-3, double max_passes = 1e4, double cache_mb = 512)
      : tolerance_(tolerance), max_passes_(max_passes), cache_mb_(cache_mb) {}
  ModelKind kind() const override { return ModelKind::svr; }

  const RowMatrix& support_vectors() const { return sv_; }
  const Eigen::VectorXd& dual_coef() const { return coef_; }
  double bias() const { return bias_; }
  const SvrSolution& solution() const { return solution_; }

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  double tolerance_;
  double max_passes_;
  double cache_mb_;
  double gamma_ = 1e-3;
  RowMatrix sv_;
  Eigen::VectorXd coef_;
  double bias_ = 0.0;
  SvrSolution solution_;
};

// Exact GP regression with the inhomogeneous dot-product kernel
// k(x, x') = 1 + x.x' and observation noise alpha; only the posterior mean
// is used. Large training sets switch to the equivalent weight-space solve.
class GpModel final : public Predictor {
 public:
  static constexpr double kSigma0Sq = 1.0;
  static constexpr Eigen::Index kDualLimit = 4000;

  ModelKind kind() const override { return ModelKind::gp; }
  // Posterior mean as linear function of [1, x]: mean = w0 + w.x
  const Eigen::VectorXd& weights() const { return w_; }
  bool used_dual() const { return dual_; }

  static Eigen::VectorXd posterior_mean_dual(const RowMatrix& x, const Eigen::VectorXd& y,
                                             double alpha, const RowMatrix& query);
  static Eigen::VectorXd posterior_mean_primal(const RowMatrix& x, const Eigen::VectorXd& y,
                                               double alpha, const RowMatrix& query);

 protected:
  void do_fit(const Dataset& train, const Dataset& valid) override;
  Eigen::VectorXd do_predict(const Dataset& samples) const override;
  void save_params(ParamBlob& blob) const override;
  void load_params(const ParamBlob& blob) override;

 private:
  Eigen::VectorXd w_;  // size features + 1, bias first
  bool dual_ = true;
};

}  // namespace glyfe::models
