#include "glyfe/models/kernel_machines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "glyfe/errors.hpp"
#include "glyfe/kernels.hpp"

namespace glyfe::models {

// ------------------------------------------------------------ row cache

RbfRowCache::RbfRowCache(const RowMatrix& x, double gamma, double budget_mb)
    : x_(x), gamma_(gamma) {
  const double l = static_cast<double>(x.rows());
  const double budget = budget_mb * 1024.0 * 1024.0;
  if (l * l * sizeof(double) <= budget) {
    full_ = true;
    gram_ = kernels::rbf_gram(x, x, gamma);
  } else {
    max_rows_ = std::max<std::size_t>(2, static_cast<std::size_t>(budget / (l * sizeof(double))));
  }
}

const double* RbfRowCache::row(Eigen::Index i) {
  if (full_) return gram_.row(i).data();
  auto it = index_.find(i);
  if (it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return lru_.front().second.data();
  }
  if (lru_.size() >= max_rows_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  std::vector<double> r(static_cast<std::size_t>(x_.rows()));
  kernels::rbf_row(x_, i, gamma_, r);
  lru_.emplace_front(i, std::move(r));
  index_[i] = lru_.begin();
  return lru_.front().second.data();
}

// ------------------------------------------------------------------- SMO

namespace {

constexpr double kTau = 1e-12;

}  // namespace

// Variables 0..l-1 are alpha+ (label +1), l..2l-1 are alpha- (label -1);
// Q(s, t) = y_s y_t K(s mod l, t mod l). Minimizes 1/2 a'Qa + p'a over
// 0 <= a <= C with y'a = 0.
SvrSolution solve_svr_dual(const RowMatrix& x, const Eigen::VectorXd& target, double gamma,
                           double c, double epsilon, double tolerance,
                           std::size_t max_iterations, double cache_mb) {
  const Eigen::Index l = x.rows();
  if (l == 0) throw FitError("SVR: empty training set");
  if (!(c > 0) || !(gamma > 0) || !(epsilon >= 0)) throw FitError("SVR: invalid hyperparameters");
  const Eigen::Index n = 2 * l;

  RbfRowCache cache(x, gamma, cache_mb);
  std::vector<double> alpha(n, 0.0), grad(n), p(n);
  std::vector<signed char> y(n);
  for (Eigen::Index i = 0; i < l; ++i) {
    p[i] = epsilon - target[i];
    p[i + l] = epsilon + target[i];
    y[i] = 1;
    y[i + l] = -1;
  }
  grad = p;
  // RBF diagonal is 1 everywhere
  const double qd = 1.0;

  auto upper = [&](Eigen::Index s) { return alpha[s] >= c; };
  auto lower = [&](Eigen::Index s) { return alpha[s] <= 0.0; };

  SvrSolution sol;
  std::size_t iter = 0;
  while (iter < max_iterations) {
    // first index: maximal violating
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (y[s] == 1) {
        if (!upper(s) && -grad[s] >= gmax) {
          gmax = -grad[s];
          i = s;
        }
      } else if (!lower(s) && grad[s] >= gmax) {
        gmax = grad[s];
        i = s;
      }
    }
    const double* ki = i >= 0 ? cache.row(i % l) : nullptr;

    // second index: largest objective decrease
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (y[s] == 1) {
        if (lower(s)) continue;
        const double diff = gmax + grad[s];
        gmax2 = std::max(gmax2, grad[s]);
        if (diff > 0) {
          const double qij = y[i] * ki[s % l];
          double quad = 2 * qd - 2.0 * y[i] * qij;
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            j = s;
          }
        }
      } else {
        if (upper(s)) continue;
        const double diff = gmax - grad[s];
        gmax2 = std::max(gmax2, -grad[s]);
        if (diff > 0) {
          const double qij = -y[i] * ki[s % l];
          double quad = 2 * qd + 2.0 * y[i] * qij;
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) {
            best = obj;
            j = s;
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tolerance) {
      sol.converged = true;
      break;
    }
    ++iter;

    const double* kj = cache.row(j % l);
    ki = cache.row(i % l);
    const double kij = ki[j % l];
    const double qij = y[i] * y[j] * kij;
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2 * qd + 2 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2 * qd - 2 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    const double yi = y[i];
    const double yj = y[j];
    for (Eigen::Index s = 0; s < n; ++s) {
      const Eigen::Index r = s % l;
      grad[s] += y[s] * (yi * ki[r] * di + yj * kj[r] * dj);
    }
  }
  sol.iterations = iter;

  // bias from free variables, or the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t nr_free = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    const double yg = y[s] * grad[s];
    if (upper(s)) {
      if (y[s] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(s)) {
      if (y[s] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++nr_free;
      sum_free += yg;
    }
  }
  const double rho = nr_free > 0 ? sum_free / static_cast<double>(nr_free) : 0.5 * (ub + lb);
  sol.bias = -rho;

  double obj = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) obj += alpha[s] * (grad[s] + p[s]);
  sol.objective = 0.5 * obj;

  sol.beta.resize(l);
  for (Eigen::Index r = 0; r < l; ++r) sol.beta[r] = alpha[r] - alpha[r + l];
  return sol;
}

void SvrModel::do_fit(const Dataset& train, const Dataset&) {
  gamma_ = hp_.at("gamma");
  const double c = hp_.at("C");
  const double eps = hp_.at("epsilon");
  const auto cap = static_cast<std::size_t>(max_passes_ * static_cast<double>(train.size()));
  solution_ = solve_svr_dual(train.X, train.y, gamma_, c, eps, tolerance_, cap, cache_mb_);

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < train.size(); ++i)
    if (solution_.beta[i] != 0.0) sv.push_back(i);
  sv_.resize(static_cast<Eigen::Index>(sv.size()), train.X.cols());
  coef_.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    sv_.row(k) = train.X.row(sv[k]);
    coef_[k] = solution_.beta[sv[k]];
  }
  bias_ = solution_.bias;
}

Eigen::VectorXd SvrModel::do_predict(const Dataset& samples) const {
  if (sv_.rows() == 0) return Eigen::VectorXd::Constant(samples.size(), bias_);
  const RowMatrix k = kernels::rbf_gram(samples.X, sv_, gamma_);
  return (k * coef_).array() + bias_;
}

void SvrModel::save_params(ParamBlob& blob) const {
  blob.meta["gamma"] = gamma_;
  blob.meta["bias"] = bias_;
  blob.meta["iterations"] = solution_.iterations;
  blob.meta["converged"] = solution_.converged;
  blob.arrays.emplace_back("support_vectors", Eigen::MatrixXd(sv_));
  blob.arrays.emplace_back("dual_coef", coef_);
}

void SvrModel::load_params(const ParamBlob& blob) {
  gamma_ = blob.meta.at("gamma").get<double>();
  bias_ = blob.meta.at("bias").get<double>();
  sv_ = blob.array("support_vectors");
  coef_ = blob.array("dual_coef").col(0);
}

// -------------------------------------------------------------------- GP

Eigen::VectorXd GpModel::posterior_mean_dual(const RowMatrix& x, const Eigen::VectorXd& y,
                                             double alpha, const RowMatrix& query) {
  RowMatrix k = kernels::dot_gram(x, x, kSigma0Sq);
  k.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw FitError("GP: kernel matrix is not positive definite");
  const Eigen::VectorXd a = llt.solve(y);
  return kernels::dot_gram(query, x, kSigma0Sq) * a;
}

namespace {

Eigen::MatrixXd augmented(const RowMatrix& x) {
  Eigen::MatrixXd phi(x.rows(), x.cols() + 1);
  phi.col(0).setConstant(std::sqrt(GpModel::kSigma0Sq));
  phi.rightCols(x.cols()) = x;
  return phi;
}

Eigen::VectorXd primal_weights(const RowMatrix& x, const Eigen::VectorXd& y, double alpha) {
  const Eigen::MatrixXd phi = augmented(x);
  Eigen::MatrixXd a = phi.transpose() * phi;
  a.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw FitError("GP: normal matrix is not positive definite");
  return llt.solve(phi.transpose() * y);
}

}  // namespace

Eigen::VectorXd GpModel::posterior_mean_primal(const RowMatrix& x, const Eigen::VectorXd& y,
                                               double alpha, const RowMatrix& query) {
  return augmented(query) * primal_weights(x, y, alpha);
}

void GpModel::do_fit(const Dataset& train, const Dataset&) {
  const double alpha = hp_.at("alpha");
  if (!(alpha > 0)) throw FitError("GP: alpha must be positive");
  const Eigen::Index d = train.X.cols();
  dual_ = train.size() <= kDualLimit;
  if (dual_) {
    RowMatrix k = kernels::dot_gram(train.X, train.X, kSigma0Sq);
    k.diagonal().array() += alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw FitError("GP: kernel matrix is not positive definite");
    const Eigen::VectorXd a = llt.solve(train.y);
    w_.resize(d + 1);
    w_[0] = kSigma0Sq * a.sum();
    w_.tail(d) = train.X.transpose() * a;
  } else {
    w_ = primal_weights(train.X, train.y, alpha);
    w_[0] *= std::sqrt(kSigma0Sq);
  }
}

Eigen::VectorXd GpModel::do_predict(const Dataset& samples) const {
  return (samples.X * w_.tail(w_.size() - 1)).array() + w_[0];
}

void GpModel::save_params(ParamBlob& blob) const {
  blob.meta["dual"] = dual_;
  blob.arrays.emplace_back("weights", w_);
}

void GpModel::load_params(const ParamBlob& blob) {
  dual_ = blob.meta.value("dual", true);
  w_ = blob.array("weights").col(0);
}

}  // namespace glyfe::models
