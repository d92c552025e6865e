#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "glyfe/errors.hpp"
#include "glyfe/models/elm.hpp"
#include "glyfe/models/ffnn.hpp"
#include "glyfe/models/kernel_machines.hpp"
#include "glyfe/models/linear.hpp"
#include "glyfe/models/lstm.hpp"
#include "glyfe/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace glyfe;
using namespace glyfe::models;
using test::gradient_error;
using test::random_matrix;
using test::svr_qp_oracle;

namespace {

Hyperparams hp(std::initializer_list<std::pair<std::string, double>> v) {
  Hyperparams h;
  for (const auto& p : v) h.values.push_back(p);
  return h;
}

}  // namespace

TEST_CASE("Base returns the last glucose reading in scaled space") {
  Dataset d = test::constant_dataset(3, 100.0);
  auto scaler = std::make_shared<Scaler>(test::uniform_scaler(100.0, 20.0));
  d = test::scaled(d, scaler);
  BaseModel m;
  m.fit(d, d, {}, 0);
  const Eigen::VectorXd p = m.predict(d);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(0.0).epsilon(1e-15));

  Dataset one = test::constant_dataset(1, 108.4);
  one = test::scaled(one, scaler);
  CHECK(m.predict(one)[0] == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("AR(1) recovers the coefficients of a noiseless process") {
  // g_t = 0.9 g_{t-1} + 5, one trajectory per sample from varied starts
  Rng rng(1);
  const auto law = [](double g) { return 0.9 * g + 5.0; };
  Dataset d = test::trajectory_dataset(rng, 300, Horizon{5}, law);
  ArModel m(false);
  m.fit(d, d, hp({{"p", 1}}), 0);
  CHECK(std::abs(m.alpha()[0] - 0.9) < 1e-6);
  CHECK(std::abs(m.intercept() - 5.0) < 1e-6);

  SUBCASE("one-step recursion matches the direct one-step prediction") {
    const Eigen::VectorXd a = m.predict(d);
    const Eigen::VectorXd b = m.predict_one_step(d);
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("AR recursion feeds predictions back over the horizon") {
  Rng rng(2);
  Dataset train = test::trajectory_dataset(rng, 200, Horizon{5}, [](double g) { return 0.5 * g + 50.0; });
  ArModel m(false);
  m.fit(train, train, hp({{"p", 1}}), 0);
  Dataset q = test::constant_dataset(1, 60.0);
  q.horizon = Horizon{30};
  double g = 60.0;
  for (int s = 0; s < 6; ++s) g = m.alpha()[0] * g + m.intercept();
  CHECK(m.predict(q)[0] == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("Poly handles degree 100 without breaking down") {
  Rng rng(3);
  Dataset d = test::constant_dataset(2000, 100.0);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    d.t[i] = 1577836800 + i * 300;
    const double s = PolyModel::time_of_day(d.target_time(i), 0);
    d.y[i] = std::sin(3 * s) + 0.01 * rng.normal();
  }
  PolyModel m;
  m.fit(d, d, hp({{"degree", 100}}), 0);
  const Eigen::VectorXd p = m.predict(d);
  CHECK(mse(p, d.y) < 1e-3);
}

TEST_CASE("Legendre recurrence matches closed forms") {
  const double s = 0.3;
  const Eigen::VectorXd p = PolyModel::legendre(s, 3);
  CHECK(p[2] == doctest::Approx(0.5 * (3 * s * s - 1)));
  CHECK(p[3] == doctest::Approx(0.5 * (5 * s * s * s - 3 * s)));
}

TEST_CASE("GP posterior mean equals the dense formula") {
  Rng rng(11);
  const RowMatrix x = random_matrix(rng, 9, 4);
  Eigen::VectorXd y(9);
  for (int i = 0; i < 9; ++i) y[i] = rng.normal();
  const RowMatrix q = random_matrix(rng, 5, 4);
  const double alpha = 0.3;

  Eigen::MatrixXd k(9, 9), ks(5, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) k(i, j) = 1.0 + x.row(i).dot(x.row(j)) + (i == j ? alpha : 0.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 9; ++j) ks(i, j) = 1.0 + q.row(i).dot(x.row(j));
  const Eigen::VectorXd expect = ks * k.fullPivLu().solve(y);

  const Eigen::VectorXd dual = GpModel::posterior_mean_dual(x, y, alpha, q);
  const Eigen::VectorXd primal = GpModel::posterior_mean_primal(x, y, alpha, q);
  Dataset train = test::raw_dataset(x, y);
  Dataset query = test::raw_dataset(q, Eigen::VectorXd::Zero(5));
  GpModel m;
  m.fit(train, train, hp({{"alpha", alpha}}), 0);
  const Eigen::VectorXd model = m.predict(query);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(dual[i] - expect[i]) < 1e-8);
    CHECK(std::abs(primal[i] - expect[i]) < 1e-8);
    CHECK(std::abs(model[i] - expect[i]) < 1e-8);
  }
}

TEST_CASE("GP refuses an empty training set") {
  GpModel m;
  Dataset empty = test::raw_dataset(RowMatrix(0, 4), Eigen::VectorXd(0));
  CHECK_THROWS_AS(m.fit(empty, empty, hp({{"alpha", 1.0}}), 0), FitError);
}

TEST_CASE("SVR dual objective matches a brute-force QP and satisfies KKT") {
  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const int l = 12 + 8 * trial;
    const RowMatrix x = random_matrix(rng, l, 3);
    Eigen::VectorXd y(l);
    for (int i = 0; i < l; ++i) y[i] = std::sin(x(i, 0)) + 0.5 * x(i, 1) + 0.1 * rng.normal();
    const double gamma = 0.5, c = 2.0 + trial, eps = 0.1;
    const SvrSolution sol = solve_svr_dual(x, y, gamma, c, eps, 1e-3, 1000000);
    CHECK(sol.converged);

    Eigen::MatrixXd k(l, l);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j) k(i, j) = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
    const double oracle = svr_qp_oracle(k, y, c, eps);
    CHECK(std::abs(sol.objective - oracle) < 1e-4);

    const Eigen::VectorXd b = sol.beta;
    const double direct = 0.5 * b.dot(k * b) + eps * b.cwiseAbs().sum() - y.dot(b);
    CHECK(std::abs(direct - sol.objective) < 1e-9);
    CHECK(std::abs(b.sum()) < 1e-9);

    const Eigen::VectorXd f = (k * b).array() + sol.bias;
    const double tol = 1e-3;
    for (int i = 0; i < l; ++i) {
      const double r = y[i] - f[i];
      const double a = std::abs(b[i]);
      CHECK(a <= c + 1e-12);
      if (a == 0.0) CHECK(std::abs(r) <= eps + tol);
      else if (a < c) CHECK(std::abs(r - eps * (b[i] > 0 ? 1 : -1)) <= tol);
      else CHECK((b[i] > 0 ? r : -r) >= eps - tol);
    }
  }
}

TEST_CASE("SVR with an empty support set predicts its bias") {
  Rng rng(2);
  const RowMatrix x = random_matrix(rng, 10, 3);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 0.2);
  Dataset d = test::raw_dataset(x, y);
  SvrModel m;
  m.fit(d, d, hp({{"gamma", 0.1}, {"C", 1.0}, {"epsilon", 1.0}}), 0);
  CHECK(m.dual_coef().size() == 0);
  const Eigen::VectorXd p = m.predict(d);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == m.bias());
}

TEST_CASE("SVR row cache gives the same solution as the full Gram matrix") {
  Rng rng(8);
  const RowMatrix x = random_matrix(rng, 40, 3);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = x(i, 0) - x(i, 2);
  const SvrSolution full = solve_svr_dual(x, y, 0.3, 5.0, 0.05, 1e-3, 100000, 512);
  // room for three rows
  const SvrSolution lru = solve_svr_dual(x, y, 0.3, 5.0, 0.05, 1e-3, 100000, 3 * 40 * 8 / 1048576.0);
  CHECK(full.iterations == lru.iterations);
  CHECK(full.objective == lru.objective);
  CHECK(full.bias == lru.bias);
}

TEST_CASE("ELM interpolates a tiny set when the penalty vanishes") {
  Rng rng(4);
  const RowMatrix x = random_matrix(rng, 20, 6);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y[i] = rng.normal();
  Dataset d = test::raw_dataset(x, y);
  ElmModel m;
  m.fit(d, d, hp({{"neurons", 40}, {"lambda", 1e-9}}), 7);
  CHECK(mse(m.predict(d), y) < 1e-6);
}

TEST_CASE("ELM ridge agrees with the normal equations on both branches") {
  Rng rng(6);
  const RowMatrix tall = random_matrix(rng, 30, 10);
  const Eigen::VectorXd yt = Eigen::VectorXd::LinSpaced(30, 0, 1);
  Eigen::MatrixXd g = tall.transpose() * tall;
  g.diagonal().array() += 0.5;
  const Eigen::VectorXd expect = g.fullPivLu().solve(tall.transpose() * yt);
  CHECK((ElmModel::ridge(tall, yt, 0.5) - expect).norm() < 1e-10);

  const RowMatrix wide = tall.transpose();
  const Eigen::VectorXd yw = Eigen::VectorXd::LinSpaced(10, 0, 1);
  Eigen::MatrixXd gw = wide.transpose() * wide;
  gw.diagonal().array() += 0.5;
  const Eigen::VectorXd expect_w = gw.fullPivLu().solve(wide.transpose() * yw);
  CHECK((ElmModel::ridge(wide, yw, 0.5) - expect_w).norm() < 1e-10);
}

TEST_CASE("FFNN gradient matches central differences") {
  Rng rng(21);
  const DenseNet net(5, {6, 4, 3}, 0.01);
  Rng init(1);
  Eigen::VectorXd theta = net.initial_parameters(init);
  for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] += 0.1 * rng.normal();
  const RowMatrix x = random_matrix(rng, 7, 5);
  Eigen::VectorXd y(7);
  for (int i = 0; i < 7; ++i) y[i] = rng.normal();
  CHECK(gradient_error(net, theta, x, y) < 1e-4);
}

TEST_CASE("LSTM gradient matches central differences") {
  Rng rng(22);
  const LstmNet net(3, 5, 4, 2, 0.01);
  Rng init(2);
  const Eigen::VectorXd theta = net.initial_parameters(init);
  const RowMatrix x = random_matrix(rng, 6, 15);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y[i] = rng.normal();
  CHECK(gradient_error(net, theta, x, y) < 1e-4);
}

TEST_CASE("FFNN keeps the best validation snapshot and is deterministic") {
  Rng rng(9);
  const RowMatrix x = random_matrix(rng, 200, 6);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = x(i, 0) * x(i, 1) + 0.3 * rng.normal();
  Dataset train = test::raw_dataset(x.topRows(150), y.head(150));
  Dataset valid = test::raw_dataset(x.bottomRows(50), y.tail(50));
  FfnnModel a({8, 4}, 32, 5, 60);
  FfnnModel b({8, 4}, 32, 5, 60);
  a.fit(train, valid, hp({{"lr", 1e-2}}), 3);
  b.fit(train, valid, hp({{"lr", 1e-2}}), 3);
  const Eigen::VectorXd pa = a.predict(valid);
  const Eigen::VectorXd pb = b.predict(valid);
  CHECK(pa == pb);
  const auto& curve = a.validation_curve();
  REQUIRE(!curve.empty());
  const auto best = std::min_element(curve.begin(), curve.end());
  CHECK(a.best_epoch() == static_cast<std::size_t>(best - curve.begin()) + 1);
  CHECK(mse(pa, valid.y) == doctest::Approx(*best).epsilon(1e-12));
}

TEST_CASE("Every model survives a save/load round trip") {
  Rng rng(13);
  Dataset train = test::random_window_dataset(rng, 80);
  Dataset valid = test::random_window_dataset(rng, 20);
  ModelSettings s = ModelSettings::for_profile(Profile::desk);
  s.ffnn_layers = {8, 4};
  s.ffnn_max_epochs = 3;
  s.lstm_hidden = 3;
  s.lstm_max_epochs = 2;
  const std::vector<std::pair<ModelKind, Hyperparams>> cases{
      {ModelKind::base, {}},
      {ModelKind::poly, hp({{"degree", 3}})},
      {ModelKind::ar, hp({{"p", 3}})},
      {ModelKind::arx, hp({{"p", 2}})},
      {ModelKind::svr, hp({{"gamma", 1e-2}, {"C", 10}, {"epsilon", 0.1}})},
      {ModelKind::gp, hp({{"alpha", 1}})},
      {ModelKind::elm, hp({{"neurons", 30}, {"lambda", 1}})},
      {ModelKind::ffnn, hp({{"lr", 1e-3}})},
      {ModelKind::lstm, hp({{"lr", 1e-3}})}};
  for (const auto& [kind, h] : cases) {
    CAPTURE(name(kind));
    auto m = make_predictor(kind, s);
    m->fit(train, valid, h, 17);
    const std::string bytes = m->save().encode();
    auto back = load_predictor(bytes, s);
    CHECK(back->kind() == kind);
    CHECK(back->hyperparams() == h);
    CHECK(back->predict(valid) == m->predict(valid));
  }
}

TEST_CASE("Model blobs reject foreign bytes") {
  CHECK_THROWS_AS(ParamBlob::decode("not a blob"), FormatError);
}

TEST_CASE("Hyperparameter grids") {
  const ModelSettings s;
  const auto svr = space_for(ModelKind::svr, s);
  CHECK(svr.grid_size() == 27);
  CHECK(svr.axes[0].grid() == std::vector<double>{1e-4, 1e-3, 1e-2});
  const auto ar = space_for(ModelKind::ar, s);
  CHECK(ar.axes[0].grid() == std::vector<double>{1, 4, 7, 9, 12});
  const auto poly = space_for(ModelKind::poly, s);
  CHECK(poly.axes[0].grid() == std::vector<double>{1, 3, 10, 32, 100});
  CHECK(space_for(ModelKind::base, s).grid_size() == 1);
  const auto elm = space_for(ModelKind::elm, ModelSettings::for_profile(Profile::desk));
  CHECK(elm.axes[0].grid() == std::vector<double>{200, 500, 1000, 2000});
  CHECK(svr.axes[1].midpoint(1, 100) == 10);
}
