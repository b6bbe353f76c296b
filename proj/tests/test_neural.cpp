#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "sdistill/neural/checkpoint.hpp"
#include "sdistill/neural/graph.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/neural/sgd.hpp"
#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "test_support.hpp"

using namespace sdistill;
using namespace sdistill::neural;

TEST_CASE("elementary forward values") {
  Graph g;
  const double z[] = {0.0};
  auto x = g.constant({1, 1}, z);
  CHECK(g.scalar(g.tanh(x)) == 0.0);
  CHECK(g.scalar(g.sigmoid(x)) == 0.5);
  const double l[] = {0.0, 0.0};
  const double t[] = {0.5, 0.5};
  auto logits = g.constant({2, 1}, l);
  CHECK(g.scalar(g.softmax_cross_entropy(logits, t)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("shape mismatch and non-finite results are errors") {
  Graph g;
  const double a[] = {1, 2};
  const double b[] = {1, 2, 3};
  CHECK_THROWS(g.add(g.constant({2, 1}, a), g.constant({3, 1}, b)));
  CHECK_THROWS(g.matmul(g.constant({1, 2}, a), g.constant({3, 1}, b)));
  const double big[] = {1000.0};
  CHECK_THROWS_AS(g.scale(g.constant({1, 1}, big), 1e308), NumericalError);
}

TEST_CASE("lstm cell with zero weights and inputs stays at zero") {
  ParameterSet ps;
  auto& w = ps.add("w", {12, 6});
  auto& b = ps.add("b", {12, 1});
  Graph g;
  auto out = g.lstm_cell(g.zeros(3), g.zeros(3), g.zeros(3), g.parameter(w), g.parameter(b));
  for (double v : g.value(out.h)) CHECK(v == 0.0);
  for (double v : g.value(out.c)) CHECK(v == 0.0);
}

TEST_CASE("softmax cross-entropy gradient is softmax minus target") {
  ParameterSet ps;
  auto& p = ps.add("logits", {2, 1});
  Graph g;
  const double t[] = {1.0, 0.0};
  g.backward(g.softmax_cross_entropy(g.parameter(p), t));
  CHECK(p.grad[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(p.grad[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("masked softmax and cross-entropy lower bound") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(7), target(7);
    double s = 0.0;
    for (int i = 0; i < 7; ++i) {
      logits[i] = rng.uniform(-3, 3);
      target[i] = rng.uniform();
      s += target[i];
    }
    double entropy = 0.0;
    for (auto& v : target) {
      v /= s;
      entropy -= v * std::log(v);
    }
    Graph g;
    const double ce = g.scalar(g.softmax_cross_entropy(g.constant({7, 1}, logits), target));
    CHECK(ce >= entropy - 1e-12);
    Graph g2;
    std::vector<double> own = softmax(logits);
    const double ce_own = g2.scalar(g2.softmax_cross_entropy(g2.constant({7, 1}, logits), own));
    double h_own = 0.0;
    for (double v : own) h_own -= v * std::log(v);
    CHECK(ce_own == doctest::Approx(h_own).epsilon(1e-12));
  }
  const std::vector<std::uint8_t> mask = {0, 1, 1};
  const auto p = softmax(std::vector<double>{5.0, 0.0, 0.0}, mask);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 0.5);
}

TEST_CASE("unused parameter gets zero gradient") {
  ParameterSet ps;
  auto& used = ps.add("used", {3, 1});
  auto& unused = ps.add("unused", {3, 1});
  Rng rng(1);
  ps.init_uniform(rng, 0.5);
  Graph g;
  const double t[] = {0.2, 0.3, 0.5};
  g.parameter(unused);
  g.backward(g.softmax_cross_entropy(g.tanh(g.parameter(used)), t));
  for (double v : unused.grad.data()) CHECK(v == 0.0);
  bool any = false;
  for (double v : used.grad.data()) any = any || v != 0.0;
  CHECK(any);
}

TEST_CASE("finite differences through every op") {
  ParameterSet ps;
  auto& emb = ps.add("emb", {5, 3});
  auto& w = ps.add("w", {16, 7});
  auto& b = ps.add("b", {16, 1});
  auto& m = ps.add("m", {4, 4});
  auto& v = ps.add("v", {4, 1});
  Rng rng(11);
  ps.init_uniform(rng, 0.8);
  const double target[] = {0.1, 0.2, 0.3, 0.4};
  auto build = [&](Graph& g) {
    auto x = g.lookup(emb, 2);
    auto h = g.tanh(g.slice(g.parameter(v), 0, 4));
    auto c = g.sigmoid(g.parameter(v));
    auto st = g.lstm_cell(x, h, c, g.parameter(w), g.parameter(b));
    auto y = g.affine(g.parameter(m), g.mul(st.h, st.c), g.parameter(v));
    const Var parts[] = {y, g.scale(g.matmul(g.parameter(m), st.h), 0.5)};
    auto sum = g.sum(parts);
    auto cat = g.concat({g.slice(sum, 0, 2), g.slice(g.add(sum, y), 2, 2)});
    return g.softmax_cross_entropy(cat, target);
  };
  const auto r = testing::finite_difference_check(ps, build);
  CHECK(r.checked == ps.total_size());
  CHECK(r.max_rel < 1e-4);
}

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  CHECK(cfg.learning_rate_at(0) == 0.25);
  CHECK(cfg.learning_rate_at(9) == 0.25);
  CHECK(cfg.learning_rate_at(11) == doctest::Approx(0.2116).epsilon(1e-12));
}

TEST_CASE("config map round trip and validation") {
  TrainConfig cfg;
  cfg.hidden = 17;
  cfg.learning_rate = 0.125;
  const auto back = TrainConfig::from_map(cfg.to_map());
  CHECK(back.hidden == 17);
  CHECK(back.learning_rate == 0.125);
  CHECK_THROWS_AS(TrainConfig::from_map({{"bogus", "1"}}), UsageError);
  TrainConfig bad;
  bad.decay = -1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("sgd step: zero gradient, clipping") {
  ParameterSet ps;
  auto& p = ps.add("p", {2, 1});
  p.value[0] = 1.0;
  p.value[1] = -1.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  ps.zero_grad();
  CHECK(sgd_step(ps, cfg, 0) == 0.0);
  CHECK(p.value[0] == 1.0);
  CHECK(p.value[1] == -1.0);

  // Gradient norm 10 is clipped to 5: the update uses half the gradient.
  p.grad[0] = 6.0;
  p.grad[1] = 8.0;
  CHECK(sgd_step(ps, cfg, 0) == 10.0);
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 3.0).epsilon(1e-15));
  CHECK(p.value[1] == doctest::Approx(-1.0 - 0.1 * 4.0).epsilon(1e-15));
}

TEST_CASE("train_sgd is deterministic and reduces a convex loss") {
  auto run = [] {
    ParameterSet ps;
    ps.add("w", {3, 2});
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 0.5;
    Rng rng(derive_seed(cfg.seed, "init"));
    ps.init_uniform(rng, 0.1);
    const std::vector<std::vector<double>> xs = {{1, 0}, {0, 1}, {1, 1}};
    const std::vector<std::vector<double>> ts = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto losses = train_sgd(ps, cfg, 3, [&](Graph& g, std::size_t k, Rng&) {
      return g.softmax_cross_entropy(g.matmul(g.parameter(ps.get("w")), g.constant({2, 1}, xs[k])), ts[k]);
    });
    std::vector<double> vals(ps.get("w").value.data().begin(), ps.get("w").value.data().end());
    return std::make_pair(losses, vals);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first.back() < a.first.front());
}

TEST_CASE("checkpoint round trip and corruption detection") {
  ParameterSet ps;
  ps.add("a", {2, 3});
  ps.add("b", {4, 1});
  Rng rng(3);
  ps.init_uniform(rng, 1.0);
  ps.get("a").value[0] = -0.0;
  ps.get("b").value[3] = 1e-300;
  const auto path = testing::temp_path("ckpt.bin");
  save_checkpoint(path, {"toy", {{"k", "v"}}}, ps);
  CHECK(read_checkpoint_header(path).model_class == "toy");

  ParameterSet back;
  back.add("a", {2, 3});
  back.add("b", {4, 1});
  const auto h = load_checkpoint(path, back);
  CHECK(h.meta.at("k") == "v");
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t i = 0; i < ps.at(p).value.size(); ++i) {
      CHECK(std::bit_cast<std::uint64_t>(back.at(p).value[i]) == std::bit_cast<std::uint64_t>(ps.at(p).value[i]));
    }
  }
  ParameterSet wrong;
  wrong.add("a", {3, 2});
  wrong.add("b", {4, 1});
  CHECK_THROWS_AS(load_checkpoint(path, wrong), DataError);

  auto bytes = read_file(path);
  write_file(path, bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(path, back), DataError);
  write_file(path, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(path, back), DataError);
}
