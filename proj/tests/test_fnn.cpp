#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "funcnet/fnn.hpp"
#include "funcnet/seeds.hpp"
#include "funcnet/simgen.hpp"

using namespace funcnet;

namespace {

NetworkConfig small_config(std::vector<int> neurons, std::vector<Activation> acts,
                           std::vector<int> m_sizes) {
  NetworkConfig c;
  c.neurons = std::move(neurons);
  c.activations = std::move(acts);
  c.weight_basis_sizes = std::move(m_sizes);
  c.learn_rate = 0.05;
  c.epochs = 5;
  c.batch_size = 8;
  c.optimizer = Optimizer::Sgd;
  c.standardize = false;
  return c;
}

Eigen::MatrixXd random_matrix(long rows, long cols, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace

TEST_CASE("first-layer parameter counts") {
  // K=1, M=5, J=0, n1=4 -> 4 * (5 + 0 + 1) = 24
  auto cfg = small_config({4, 2}, {Activation::Relu, Activation::Softmax}, {5});
  auto model = FnnModel::init(cfg, 1, 0, 2, 1);
  CHECK(model.first_layer_param_count() == 24);

  // K=2, M=(3,4), J=2, n1=8 -> 8 * (3 + 4 + 2 + 1) = 80
  auto cfg2 = small_config({8, 2}, {Activation::Tanh, Activation::Softmax}, {3, 4});
  auto model2 = FnnModel::init(cfg2, 2, 2, 2, 1);
  CHECK(model2.first_layer_param_count() == 80);

  // parameter economy: strictly fewer than the raw-grid layer when M_k < P_k
  const long raw_count = 8L * (100 + 100 + 2 + 1);
  CHECK(model2.first_layer_param_count() < raw_count);
}

TEST_CASE("init is deterministic under the seed") {
  auto cfg = small_config({6, 3}, {Activation::Sigmoid, Activation::Softmax}, {4});
  auto a = FnnModel::init(cfg, 1, 2, 3, 42);
  auto b = FnnModel::init(cfg, 1, 2, 3, 42);
  CHECK((a.params().array() == b.params().array()).all());
  auto c = FnnModel::init(cfg, 1, 2, 3, 43);
  CHECK((a.params() - c.params()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward: zero parameters give uniform softmax, zero input gives bias") {
  auto cfg = small_config({3, 2}, {Activation::Sigmoid, Activation::Softmax}, {2});
  auto model = FnnModel::init(cfg, 1, 1, 2, 7);
  model.set_params(Eigen::VectorXd::Zero(model.param_count()));
  Eigen::VectorXd probs = model.forward_probs(Eigen::VectorXd::Zero(3));
  CHECK(probs(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(probs(1) == doctest::Approx(0.5).epsilon(1e-12));

  auto model2 = FnnModel::init(cfg, 1, 1, 2, 8);
  auto cache = model2.forward(Eigen::MatrixXd::Zero(1, 3));
  CHECK((cache.preact[0].row(0).transpose() - model2.bias(0)).cwiseAbs().maxCoeff() <
        1e-15);
}

TEST_CASE("softmax outputs are a distribution for arbitrary logits") {
  // single softmax layer with identity weights: probs = softmax(input)
  auto cfg = small_config({5}, {Activation::Softmax}, {});
  auto model = FnnModel::init(cfg, 0, 5, 5, 3);
  Eigen::VectorXd p_ident = Eigen::VectorXd::Zero(model.param_count());
  for (int i = 0; i < 5; ++i) p_ident(i * 5 + i) = 1.0;  // W column-major
  model.set_params(p_ident);

  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd logits = random_matrix(5, 1, rng, -15.0, 15.0);
    Eigen::VectorXd p = model.forward_probs(logits);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 1.0);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  }
  // extreme logits still sum to one and stay inside [0, 1]
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd logits = random_matrix(5, 1, rng, -400.0, 400.0);
    Eigen::VectorXd p = model.forward_probs(logits);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("dense-layer reduction oracle") {
  // the functional layer must match a plain dense layer on the flattened
  // integral-feature vector, with weight rows (c_i11..c_iKM_K, w_i1..w_iJ)
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pick_k(0, 2), pick_j(0, 3), pick_n(1, 6), pick_m(1, 5);
  for (int rep = 0; rep < 100; ++rep) {
    const int k_count = pick_k(rng);
    const int j_count = pick_j(rng);
    const int n1 = pick_n(rng);
    std::vector<int> m_sizes;
    for (int k = 0; k < k_count; ++k) m_sizes.push_back(pick_m(rng));
    auto cfg = small_config({n1, 2}, {Activation::Tanh, Activation::Softmax}, m_sizes);
    auto model = FnnModel::init(cfg, k_count, j_count, 2, derive_seed(101, rep));

    const int dim = model.input_dim();
    if (dim == 0) continue;
    Eigen::MatrixXd x = random_matrix(3, dim, rng, -2.0, 2.0);
    auto cache = model.forward(x);

    // independent dense path: flatten the first-layer blocks into one matrix
    Eigen::MatrixXd w_flat(n1, dim);
    int off = 0;
    for (int k = 0; k < k_count; ++k) {
      w_flat.middleCols(off, m_sizes[k]) = model.functional_coefs(k);
      off += m_sizes[k];
    }
    if (j_count > 0) w_flat.middleCols(off, j_count) = model.scalar_weights();
    Eigen::MatrixXd z_dense = x * w_flat.transpose();
    z_dense.rowwise() += model.bias(0).transpose();
    Eigen::MatrixXd a_dense = z_dense.array().tanh().matrix();

    CHECK((cache.preact[0] - z_dense).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((cache.act[0] - a_dense).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("loss values") {
  Eigen::VectorXd sure(2);
  sure << 1.0, 0.0;
  CHECK(cross_entropy(sure, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cross_entropy(sure, 1) == doctest::Approx(-std::log(1e-12)));

  Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(std::log(4.0)));
  CHECK_THROWS(cross_entropy(uniform, 4));

  // mean batch loss equals the average of per-sample losses
  auto cfg = small_config({3, 3}, {Activation::Sigmoid, Activation::Softmax}, {});
  auto model = FnnModel::init(cfg, 0, 2, 3, 9);
  std::mt19937_64 rng(11);
  Eigen::MatrixXd x = random_matrix(6, 2, rng);
  std::vector<int> labels = {0, 1, 2, 0, 1, 2};
  double manual = 0.0;
  for (int i = 0; i < 6; ++i)
    manual += cross_entropy(model.forward_probs(x.row(i).transpose()), labels[i]);
  manual /= 6.0;
  CHECK(model.batch_loss(x, labels) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("finite-difference gradient oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_k(0, 2), pick_j01(0, 1), pick_layers(1, 3);
  std::uniform_int_distribution<int> pick_n(2, 5), pick_m(2, 4), pick_h(2, 3);
  const std::vector<Activation> acts = {Activation::Relu, Activation::Sigmoid,
                                        Activation::Tanh};
  int checked = 0;
  for (int rep = 0; rep < 24; ++rep) {
    const int k_count = pick_k(rng);
    const int j_count = pick_j01(rng) == 0 ? 0 : 2;
    const int h = pick_h(rng);
    const int hidden = pick_layers(rng);
    std::vector<int> neurons;
    std::vector<Activation> layer_acts;
    for (int u = 0; u < hidden; ++u) {
      neurons.push_back(pick_n(rng));
      layer_acts.push_back(acts[rep % acts.size()]);
    }
    neurons.push_back(h);
    layer_acts.push_back(Activation::Softmax);
    std::vector<int> m_sizes;
    for (int k = 0; k < k_count; ++k) m_sizes.push_back(pick_m(rng));

    auto cfg = small_config(neurons, layer_acts, m_sizes);
    auto model = FnnModel::init(cfg, k_count, j_count, h, derive_seed(2024, rep));
    if (model.input_dim() == 0) continue;
    // randomize every parameter, biases included, so no relu preactivation
    // sits exactly on the kink
    model.set_params(random_matrix(model.param_count(), 1, rng, -0.8, 0.8));

    const int batch = 5;
    Eigen::MatrixXd x = random_matrix(batch, model.input_dim(), rng);
    std::vector<int> labels(batch);
    std::uniform_int_distribution<int> pick_label(0, h - 1);
    for (auto& y : labels) y = pick_label(rng);

    const Eigen::VectorXd grad = model.backward(x, labels, model.forward(x));

    const double eps = 1e-6;
    Eigen::VectorXd theta = model.params();
    for (long i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd p = theta;
      p(i) += eps;
      model.set_params(p);
      const double up = model.batch_loss(x, labels);
      p(i) -= 2 * eps;
      model.set_params(p);
      const double down = model.batch_loss(x, labels);
      const double fd = (up - down) / (2 * eps);
      const double abs_err = std::abs(fd - grad(i));
      const double denom = std::max(std::abs(fd), std::abs(grad(i)));
      const bool ok = abs_err < 1e-8 || abs_err / denom < 1e-5;
      CHECK(ok);
      if (!ok)
        MESSAGE("rep ", rep, " param ", i, " fd=", fd, " grad=", grad(i));
    }
    model.set_params(theta);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("duplicated batch gives identical gradients") {
  auto cfg = small_config({4, 2}, {Activation::Relu, Activation::Softmax}, {3});
  auto model = FnnModel::init(cfg, 1, 0, 2, 77);
  std::mt19937_64 rng(77);
  Eigen::MatrixXd x = random_matrix(4, 3, rng);
  std::vector<int> labels = {0, 1, 1, 0};

  Eigen::MatrixXd x2(8, 3);
  x2 << x, x;
  std::vector<int> labels2 = {0, 1, 1, 0, 0, 1, 1, 0};

  const Eigen::VectorXd g1 = model.backward(x, labels, model.forward(x));
  const Eigen::VectorXd g2 = model.backward(x2, labels2, model.forward(x2));
  CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dead relu neuron has zero functional-coefficient gradient") {
  auto cfg = small_config({2, 2}, {Activation::Relu, Activation::Softmax}, {2});
  auto model = FnnModel::init(cfg, 1, 0, 2, 5);
  // force neuron 0 dead by driving its bias very negative
  Eigen::VectorXd p = model.params();
  p(2 * 2 + 0) = -100.0;  // bias block follows the 2x2 C block
  model.set_params(p);
  Eigen::MatrixXd x(1, 2);
  x << 0.3, -0.4;
  auto cache = model.forward(x);
  REQUIRE(cache.act[0](0, 0) == 0.0);
  const Eigen::VectorXd grad = model.backward(x, {1}, cache);
  // C block is column-major 2x2: entries (0,0) and (0,1) belong to neuron 0
  CHECK(grad(0) == 0.0);
  CHECK(grad(2) == 0.0);
}

TEST_CASE("optimizer steps") {
  auto cfg = small_config({1, 2}, {Activation::Linear, Activation::Softmax}, {});
  cfg.neurons = {2};
  cfg.activations = {Activation::Softmax};
  cfg.learn_rate = 0.1;
  cfg.optimizer = Optimizer::Sgd;
  auto model = FnnModel::init(cfg, 0, 1, 2, 3);

  // gamma=0.1, decay=0, a=1, grad=2 -> a=0.8
  Eigen::VectorXd p = Eigen::VectorXd::Ones(model.param_count());
  model.set_params(p);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(model.param_count());
  g(0) = 2.0;
  model.step(g, 0);
  CHECK(model.params()(0) == doctest::Approx(0.8).epsilon(1e-15));

  // decay_rate=1, epoch=1 -> effective rate gamma/2
  auto cfg2 = cfg;
  cfg2.decay_rate = 1.0;
  auto model2 = FnnModel::init(cfg2, 0, 1, 2, 3);
  model2.set_params(p);
  model2.step(g, 1);
  CHECK(model2.params()(0) == doctest::Approx(1.0 - 0.05 * 2.0).epsilon(1e-15));

  // Adam first step moves by about -lr * sign(g)
  auto cfg3 = cfg;
  cfg3.optimizer = Optimizer::Adam;
  cfg3.learn_rate = 0.01;
  auto model3 = FnnModel::init(cfg3, 0, 1, 2, 3);
  model3.set_params(p);
  Eigen::VectorXd g3 = Eigen::VectorXd::Constant(model3.param_count(), 0.37);
  model3.step(g3, 0);
  // bias-corrected first step: lr * g / (|g| + eps) ~ lr
  CHECK(model3.params()(0) == doctest::Approx(1.0 - 0.01).epsilon(1e-6));

  Eigen::VectorXd bad = g;
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(model3.step(bad, 0));
}

TEST_CASE("early stopper follows a scripted loss trace") {
  // loss rises after epoch index 1; patience 2 stops within two more epochs
  EarlyStopper stopper(2);
  const std::vector<double> trace = {1.0, 0.8, 0.9, 1.0, 1.1, 1.2};
  int stopped_at = -1;
  for (std::size_t e = 0; e < trace.size(); ++e) {
    if (stopper.update(trace[e])) {
      stopped_at = static_cast<int>(e);
      break;
    }
  }
  CHECK(stopped_at == 3);  // epochs 0..3 run, i.e. at most 5 epochs
  CHECK(stopper.best_epoch() == 1);
  CHECK(stopper.best_value() == doctest::Approx(0.8));

  EarlyStopper off(0);
  for (double v : trace) CHECK_FALSE(off.update(v));
}

TEST_CASE("training is deterministic and honors dropout-off identity") {
  auto sim = scenario1(60, 99);
  Dataset ds = to_functional_dataset(sim, 11);

  NetworkConfig cfg;
  cfg.neurons = {8, 2};
  cfg.activations = {Activation::Relu, Activation::Softmax};
  cfg.weight_basis_sizes = {7};
  cfg.learn_rate = 0.01;
  cfg.epochs = 12;
  cfg.batch_size = 16;
  cfg.validation_split = 0.2;
  cfg.seed = 31;

  auto r1 = train(ds, cfg);
  auto r2 = train(ds, cfg);
  CHECK((r1.model.params().array() == r2.model.params().array()).all());
  CHECK(r1.history.train_loss == r2.history.train_loss);

  // explicit zero dropout matches the no-dropout path exactly
  auto cfg_zero = cfg;
  cfg_zero.dropout_rates = {0.0, 0.0};
  auto r3 = train(ds, cfg_zero);
  CHECK((r1.model.params().array() == r3.model.params().array()).all());

  auto pred1 = predict(r1.model, ds);
  auto pred2 = predict(r1.model, ds);
  CHECK(pred1.labels == pred2.labels);
  CHECK((pred1.probs.array() == pred2.probs.array()).all());
}

TEST_CASE("full-batch SGD with tiny rate decreases the loss every epoch") {
  auto sim = scenario1(50, 123);
  Dataset ds = to_functional_dataset(sim, 11);

  NetworkConfig cfg;
  cfg.neurons = {2};
  cfg.activations = {Activation::Softmax};
  cfg.weight_basis_sizes = {5};
  cfg.learn_rate = 1e-3;
  cfg.epochs = 25;
  cfg.batch_size = 50;  // full batch
  cfg.optimizer = Optimizer::Sgd;
  cfg.seed = 7;

  auto r = train(ds, cfg);
  for (std::size_t e = 1; e < r.history.train_loss.size(); ++e)
    CHECK(r.history.train_loss[e] <= r.history.train_loss[e - 1] + 1e-12);
}

TEST_CASE("early stopping in training restores the best parameters") {
  auto sim = scenario3(80, 17);
  Dataset ds = to_functional_dataset(sim, 11);

  NetworkConfig cfg;
  cfg.neurons = {16, 2};
  cfg.activations = {Activation::Relu, Activation::Softmax};
  cfg.weight_basis_sizes = {7};
  cfg.learn_rate = 0.2;  // deliberately unstable so validation loss bounces
  cfg.epochs = 60;
  cfg.batch_size = 8;
  cfg.validation_split = 0.25;
  cfg.early_stop_patience = 3;
  cfg.seed = 5;

  auto r = train(ds, cfg);
  CHECK(static_cast<int>(r.history.train_loss.size()) == r.history.stopped_epoch);
  if (r.history.stopped_early) {
    CHECK(r.history.stopped_epoch < cfg.epochs);
    // restored parameters reproduce the best recorded validation loss
    const double best = *std::min_element(r.history.val_loss.begin(),
                                          r.history.val_loss.end());
    CHECK(best <= r.history.val_loss.back() + 1e-12);
  }
}

TEST_CASE("predict ties break to the lowest class index") {
  Eigen::MatrixXd probs(2, 2);
  probs << 0.2, 0.8, 0.5, 0.5;
  auto labels = argmax_labels(probs);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 0);
}

TEST_CASE("extract_functional_weights averages the neuron weights") {
  auto cfg = small_config({2, 2}, {Activation::Linear, Activation::Softmax}, {3});
  auto model = FnnModel::init(cfg, 1, 0, 2, 13);
  model.set_weight_bases({BasisSystem::fourier(0.0, 1.0, 3)});
  Grid g = Grid::uniform(0.0, 1.0, 21);

  // all-zero coefficients -> zero function
  model.set_params(Eigen::VectorXd::Zero(model.param_count()));
  CHECK(model.extract_functional_weights(0, g).cwiseAbs().maxCoeff() == 0.0);

  // c2 = -c1 -> identically zero average
  Eigen::VectorXd p = Eigen::VectorXd::Zero(model.param_count());
  // C block is 2x3 column-major at offset 0: (i, m) at index m * 2 + i
  for (int m = 0; m < 3; ++m) {
    p(m * 2 + 0) = 1.0 + m;
    p(m * 2 + 1) = -(1.0 + m);
  }
  model.set_params(p);
  CHECK(model.extract_functional_weights(0, g).cwiseAbs().maxCoeff() < 1e-15);

  // single neuron equals its own weight function
  auto cfg1 = small_config({1, 2}, {Activation::Linear, Activation::Softmax}, {3});
  auto single = FnnModel::init(cfg1, 1, 0, 2, 13);
  single.set_weight_bases({BasisSystem::fourier(0.0, 1.0, 3)});
  Eigen::VectorXd q = Eigen::VectorXd::Zero(single.param_count());
  q(0) = 0.5;
  q(1) = -1.5;
  q(2) = 2.0;
  single.set_params(q);
  Eigen::VectorXd beta = single.extract_functional_weights(0, g);
  FunctionalObservation direct(BasisSystem::fourier(0.0, 1.0, 3),
                               (Eigen::VectorXd(3) << 0.5, -1.5, 2.0).finished());
  CHECK((beta - eval_function(direct, g)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("domain rescaling leaves neuron outputs unchanged") {
  // rebuild on [a', b'] = alpha * [a, b] + beta with c' = c / alpha
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> pick_alpha(0.25, 4.0), pick_beta(-3.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double alpha = pick_alpha(rng), beta = pick_beta(rng);
    const double a0 = 0.0, b0 = 1.0;
    const double a1 = alpha * a0 + beta, b1 = alpha * b0 + beta;

    auto data_basis0 = BasisSystem::fourier(a0, b0, 7);
    auto data_basis1 = BasisSystem::fourier(a1, b1, 7);
    auto wb0 = BasisSystem::fourier(a0, b0, 5);
    auto wb1 = BasisSystem::fourier(a1, b1, 5);

    Eigen::MatrixXd curves = random_matrix(4, 7, rng);
    auto rule0 = feature_rule(data_basis0);
    auto rule1 = feature_rule(data_basis1);
    Eigen::MatrixXd feats0 = integral_features_matrix(curves, data_basis0, wb0, rule0);
    Eigen::MatrixXd feats1 = integral_features_matrix(curves, data_basis1, wb1, rule1);

    auto cfg = small_config({3, 2}, {Activation::Tanh, Activation::Softmax}, {5});
    auto model0 = FnnModel::init(cfg, 1, 0, 2, derive_seed(404, rep));
    auto model1 = model0;
    // scale the functional coefficients by 1/alpha
    Eigen::VectorXd p = model1.params();
    p.segment(0, 3 * 5) /= alpha;
    model1.set_params(p);

    auto out0 = model0.forward(feats0);
    auto out1 = model1.forward(feats1);
    CHECK((out0.preact[0] - out1.preact[0]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((out0.probs() - out1.probs()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("train rejects bad configurations") {
  auto sim = scenario1(20, 3);
  Dataset ds = to_functional_dataset(sim, 7);

  NetworkConfig cfg;
  cfg.neurons = {4, 2};
  cfg.activations = {Activation::Relu, Activation::Softmax};
  cfg.weight_basis_sizes = {5};
  cfg.epochs = 2;

  auto wrong_h = cfg;
  wrong_h.neurons = {4, 3};
  CHECK_THROWS(train(ds, wrong_h));

  auto no_softmax = cfg;
  no_softmax.activations = {Activation::Relu, Activation::Relu};
  CHECK_THROWS(train(ds, no_softmax));

  auto bad_split = cfg;
  bad_split.validation_split = 1.0;
  CHECK_THROWS(train(ds, bad_split));
}
