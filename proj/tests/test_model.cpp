#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sasq/model.hpp"

using namespace sasq;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Sequence random_sequence(int T, int M, int N, int K, std::uint64_t seed) {
  Rng rng(seed);
  Sequence seq;
  seq.id = "mem";
  seq.frame_rate_hz = 20.0;
  for (int t = 0; t < T; ++t) {
    FeatureCube cube(M, N, K);
    for (double& v : cube.data) v = rng.gaussian();
    seq.frames.push_back(std::move(cube));
    seq.steering.push_back(rng.uniform(-1.0, 1.0));
  }
  return seq;
}

void fill_const(ModelParams& m, double w) {
  Vec theta = m.flatten();
  for (double& v : theta) v = w;
  m.unflatten(theta);
}

}  // namespace

TEST_CASE("init_model determinism and shapes") {
  ModelDims dims;  // 7x7x16, D=32, fcn 32
  ModelParams a = init_model(dims, Normalizer::Sparse, true, false, 11);
  ModelParams b = init_model(dims, Normalizer::Sparse, true, false, 11);
  ModelParams c = init_model(dims, Normalizer::Sparse, true, false, 12);

  Vec fa = a.flatten(), fb = b.flatten(), fc = c.flatten();
  CHECK(fa.size() == fb.size());
  bool identical = true, any_diff = false;
  for (size_t i = 0; i < fa.size(); ++i) {
    identical = identical && fa[i] == fb[i];
    any_diff = any_diff || fa[i] != fc[i];
  }
  CHECK(identical);
  CHECK(any_diff);

  CHECK(a.head1.W.rows == 32);
  CHECK(a.head1.W.cols == 32);  // LSTM hidden feeds the head
  CHECK(a.head2.W.rows == 1);
  CHECK(a.head2.W.cols == 32);
  CHECK(a.lstm.Wi.rows == 32);
  CHECK(a.lstm.Wi.cols == 16 + 32);
  CHECK(static_cast<int>(a.attention.w_f.size()) == 16);
  CHECK(static_cast<int>(a.attention.w_h.size()) == 32);
  for (double v : a.lstm.bf) CHECK(v == 1.0);
  for (double v : a.lstm.bi) CHECK(v == 0.0);

  ModelDims bad = dims;
  bad.K = 0;
  CHECK_THROWS_AS(init_model(bad, Normalizer::Sparse, true, false, 1), std::invalid_argument);
}

TEST_CASE("head reads the context directly when the LSTM is off") {
  ModelDims dims;
  dims.K = 16;
  ModelParams m = init_model(dims, Normalizer::None, false, false, 3);
  CHECK(m.head1.W.cols == 16);
}

TEST_CASE("flatten/unflatten round trip") {
  ModelDims dims{3, 4, 5, 6, 7};
  ModelParams m = init_model(dims, Normalizer::Soft, true, false, 9);
  Vec theta = m.flatten();
  CHECK(theta.size() == m.param_count());

  ModelParams n = init_model(dims, Normalizer::Soft, true, false, 10);
  n.unflatten(theta);
  Vec back = n.flatten();
  for (size_t i = 0; i < theta.size(); ++i) CHECK(back[i] == theta[i]);

  theta.pop_back();
  CHECK_THROWS_AS(n.unflatten(theta), std::invalid_argument);
}

TEST_CASE("all-zero parameters give zero steering and a uniform map") {
  ModelDims dims{2, 3, 4, 5, 6};
  for (Normalizer kind : {Normalizer::Sparse, Normalizer::Soft, Normalizer::None}) {
    ModelParams m = init_model(dims, kind, true, false, 1);
    fill_const(m, 0.0);
    FeatureCube cube(2, 3, 4);
    Rng rng(8);
    for (double& v : cube.data) v = rng.gaussian();
    StepCache cache;
    StepResult r = forward_step(m, cube, lstm_zero_state(5), cache);
    CHECK(r.steering == 0.0);
    for (double w : r.map) CHECK(w == doctest::Approx(1.0 / 6).epsilon(1e-14));
  }
}

TEST_CASE("location-mean invariance without attention or memory") {
  ModelDims dims{3, 3, 4, 5, 6};
  ModelParams m = init_model(dims, Normalizer::None, false, false, 21);
  FeatureCube cube(3, 3, 4);
  Rng rng(22);
  for (double& v : cube.data) v = rng.gaussian();

  StepCache cache;
  const double base = forward_step(m, cube, lstm_zero_state(5), cache).steering;

  // permute the 9 locations; the location mean, and hence the output, is fixed
  std::vector<int> perm{4, 2, 8, 0, 6, 1, 7, 5, 3};
  FeatureCube shuffled(3, 3, 4);
  for (int i = 0; i < 9; ++i)
    for (int k = 0; k < 4; ++k) shuffled.at(i, k) = cube.at(perm[i], k);
  const double permuted = forward_step(m, shuffled, lstm_zero_state(5), cache).steering;
  CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("scalar chain worked example") {
  // Single location, K=D=fcn=1, every weight 0.5 except unit head; the
  // attention map over one location is (1), so the LSTM input is the cube
  // value itself and each stage can be evaluated by hand.
  ModelDims dims{1, 1, 1, 1, 1};
  ModelParams m = init_model(dims, Normalizer::Sparse, true, false, 1);
  Vec theta = m.flatten();
  // layout: w_f, w_h, b, Wi(2), bi, Wf(2), bf, Wg(2), bg, Wo(2), bo, W1, b1, W2, b2
  theta = {0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0,
           1.0, 0.0, 1.0, 0.0};
  m.unflatten(theta);

  FeatureCube cube(1, 1, 1);
  cube.at(0, 0) = 1.0;
  StepCache cache;
  StepResult r = forward_step(m, cube, lstm_zero_state(1), cache);

  const double sig = logistic(0.5);
  const double c1 = sig * std::tanh(0.5);          // ~0.287649
  const double h1 = sig * std::tanh(c1);           // ~0.174275
  const double expected = std::tanh(h1);           // unit head1 + tanh, unit head2
  CHECK(r.map[0] == 1.0);
  CHECK(r.state.c[0] == doctest::Approx(c1).epsilon(1e-12));
  CHECK(r.state.h[0] == doctest::Approx(h1).epsilon(1e-12));
  CHECK(r.steering == doctest::Approx(expected).epsilon(1e-9));
  CHECK(r.steering == doctest::Approx(0.17253).epsilon(1e-3));
}

TEST_CASE("predict_sequence alignment and state continuity") {
  ModelDims dims{3, 3, 4, 6, 5};
  ModelParams m = init_model(dims, Normalizer::Sparse, true, false, 31);
  Sequence seq = random_sequence(100, 3, 3, 4, 32);

  SUBCASE("delay handling") {
    PredictionTrace t0 = predict_sequence(m, seq, 0);
    CHECK(t0.preds.size() == 100);
    CHECK(t0.targets.size() == 100);

    PredictionTrace t10 = predict_sequence(m, seq, 10);
    CHECK(t10.preds.size() == 90);
    CHECK(t10.maps.size() == 90);
    CHECK(t10.targets[0] == seq.steering[10]);
    CHECK(t10.targets.back() == seq.steering[99]);

    CHECK_THROWS_AS(predict_sequence(m, seq, 100), std::invalid_argument);
    CHECK_THROWS_AS(predict_sequence(m, seq, -1), std::invalid_argument);
  }

  SUBCASE("two chunks with carried state equal one pass, bit for bit") {
    Vec full;
    std::vector<Vec> full_maps;
    LstmState state = lstm_zero_state(6);
    run_frames(m, seq.frames, 0, 100, state, full, &full_maps);

    Vec split;
    std::vector<Vec> split_maps;
    LstmState s2 = lstm_zero_state(6);
    run_frames(m, seq.frames, 0, 37, s2, split, &split_maps);
    run_frames(m, seq.frames, 37, 100, s2, split, &split_maps);

    REQUIRE(split.size() == full.size());
    for (size_t i = 0; i < full.size(); ++i) CHECK(split[i] == full[i]);
    for (size_t i = 0; i < full_maps.size(); ++i)
      for (size_t j = 0; j < full_maps[i].size(); ++j)
        CHECK(split_maps[i][j] == full_maps[i][j]);
    for (int j = 0; j < 6; ++j) CHECK(s2.h[j] == state.h[j]);
  }
}

TEST_CASE("exact-fit residuals give zero gradients") {
  ModelDims dims{2, 2, 3, 4, 4};
  ModelParams m = init_model(dims, Normalizer::Sparse, true, false, 41);
  FeatureCube cube(2, 2, 3);
  Rng rng(42);
  for (double& v : cube.data) v = rng.gaussian();

  StepCache cache;
  StepResult r = forward_step(m, cube, lstm_zero_state(4), cache);
  const double upstream = l1_loss(r.steering, r.steering).dpred;  // residual sign at 0
  CHECK(upstream == 0.0);

  ModelGrads grads = zero_grads(m);
  LstmState dstate = lstm_zero_state(4);
  backward_step(m, cache, upstream, dstate, grads);
  for (double g : grads.flatten()) CHECK(g == 0.0);
}

TEST_CASE("gradcheck passes for every variant") {
  ModelDims dims{3, 3, 4, 5, 4};
  struct Case {
    Normalizer kind;
    bool use_lstm;
  };
  for (Case c : {Case{Normalizer::Sparse, true}, Case{Normalizer::Soft, true},
                 Case{Normalizer::None, true}, Case{Normalizer::Sparse, false},
                 Case{Normalizer::Soft, false}}) {
    GradcheckReport rep = gradcheck_model(dims, c.kind, c.use_lstm, 2024);
    CAPTURE(static_cast<int>(c.kind));
    CAPTURE(c.use_lstm);
    CHECK(rep.checked > 0);
    CHECK(rep.max_rel_error < 1e-4);
    CHECK(rep.pass);
  }
}
