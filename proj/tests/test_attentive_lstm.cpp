#include <doctest.h>

#include <cmath>
#include <vector>

#include "mabicap/attentive_lstm.hpp"
#include "mabicap/errors.hpp"
#include "testutil.hpp"

using namespace mabicap;

namespace {

// Hand-rolled single LSTM step with explicit loops; mirrors nothing of the
// library's tensor machinery.
void lstm_step_oracle(const std::vector<double>& w_input,
                      const std::vector<double>& w_state,
                      const std::vector<double>& bias,
                      const std::vector<double>& x,
                      const std::vector<double>& h_prev,
                      const std::vector<double>& c_prev, int in_dim, int H,
                      std::vector<double>& h, std::vector<double>& c) {
  std::vector<double> gates(4 * H, 0.0);
  for (int r = 0; r < 4 * H; ++r) {
    double acc = bias[r];
    for (int j = 0; j < in_dim; ++j) acc += w_input[r * in_dim + j] * x[j];
    for (int j = 0; j < H; ++j) acc += w_state[r * H + j] * h_prev[j];
    gates[r] = acc;
  }
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  h.assign(H, 0.0);
  c.assign(H, 0.0);
  for (int j = 0; j < H; ++j) {
    const double gi = sig(gates[j]);
    const double gf = sig(gates[H + j]);
    const double go = sig(gates[2 * H + j]);
    const double gc = std::tanh(gates[3 * H + j]);
    c[j] = gf * c_prev[j] + gi * gc;
    h[j] = go * std::tanh(c[j]);
  }
}

AttentionParams random_attention(Rng& rng, int query_dim, int key_dim, int m) {
  auto p = AttentionParams::init(rng, query_dim, key_dim, m);
  // spread beyond the tiny init range so tests see nontrivial weights
  for (double& v : p.w_hidden->data) v = rng.uniform(-1, 1);
  for (double& v : p.b_hidden->data) v = rng.uniform(-1, 1);
  for (double& v : p.w_score->data) v = rng.uniform(-1, 1);
  return p;
}

}  // namespace

TEST_CASE("embed returns the requested embedding column") {
  Tape tape;
  auto E = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto x = embed(tape, E, 1);
  CHECK(x->data == std::vector<double>{0, 1, 0});

  // definitional: embed(s) == E * onehot(s)
  Rng rng(21);
  auto E2 = Tensor::uniform(rng, {4, 5}, -1, 1);
  auto onehot = Tensor::zeros({5});
  onehot->data[3] = 1.0;
  auto via_matvec = ops::matvec(tape, E2, onehot);
  auto via_embed = embed(tape, E2, 3);
  for (int i = 0; i < 4; ++i) CHECK(via_embed->data[i] == via_matvec->data[i]);

  CHECK_THROWS_AS(embed(tape, E, 3), IndexError);
}

TEST_CASE("attend: degenerate and convexity cases") {
  Rng rng(31);
  auto params = random_attention(rng, 4, 3, 5);

  // single region: weights [1.0], context equals that region
  Tape tape;
  auto h = Tensor::uniform(rng, {4}, -1, 1);
  auto single = Tensor::uniform(rng, {1, 3}, -1, 1);
  auto res = attend(tape, params, h, single);
  CHECK(res.weights->data[0] == doctest::Approx(1.0));
  for (int d = 0; d < 3; ++d)
    CHECK(res.context->data[d] == doctest::Approx(single->data[d]));

  // identical regions: context equals the common vector for any weights
  auto same = Tensor::zeros({4, 3});
  for (int i = 0; i < 4; ++i)
    for (int d = 0; d < 3; ++d) same->at(i, d) = single->data[d];
  auto res2 = attend(tape, params, h, same);
  for (int d = 0; d < 3; ++d)
    CHECK(res2.context->data[d] == doctest::Approx(single->data[d]));
}

TEST_CASE("attend matches a two-path recomputation on random inputs") {
  Rng rng(32);
  const int H = 4, D = 3, N = 3, M = 5;
  auto params = random_attention(rng, H, D, M);
  auto h = Tensor::uniform(rng, {H}, -1, 1);
  auto keys = Tensor::uniform(rng, {N, D}, -1, 1);

  Tape tape;
  auto res = attend(tape, params, h, keys);

  // independent recomputation: explicit perceptron scores, softmax, sum
  std::vector<double> scores(N);
  for (int i = 0; i < N; ++i) {
    std::vector<double> joint(H + D);
    for (int j = 0; j < H; ++j) joint[j] = h->data[j];
    for (int d = 0; d < D; ++d) joint[H + d] = keys->at(i, d);
    double score = 0.0;
    for (int m = 0; m < M; ++m) {
      double acc = params.b_hidden->data[m];
      for (int j = 0; j < H + D; ++j)
        acc += params.w_hidden->at(m, j) * joint[j];
      score += params.w_score->data[m] * std::tanh(acc);
    }
    scores[i] = score;
  }
  double mx = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  std::vector<double> alpha(N);
  for (int i = 0; i < N; ++i) denom += std::exp(scores[i] - mx);
  for (int i = 0; i < N; ++i) alpha[i] = std::exp(scores[i] - mx) / denom;
  std::vector<double> z(D, 0.0);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < D; ++d) z[d] += alpha[i] * keys->at(i, d);

  for (int i = 0; i < N; ++i)
    CHECK(res.weights->data[i] == doctest::Approx(alpha[i]).epsilon(1e-10));
  for (int d = 0; d < D; ++d)
    CHECK(res.context->data[d] == doctest::Approx(z[d]).epsilon(1e-10));
}

TEST_CASE("attend invariants: normalization, convex hull, permutation") {
  Rng rng(33);
  const int H = 5, D = 4, M = 5;
  auto params = random_attention(rng, H, D, M);
  for (int trial = 0; trial < 10; ++trial) {
    const int N = 1 + static_cast<int>(rng.uniform_index(5));
    auto h = Tensor::uniform(rng, {H}, -2, 2);
    auto keys = Tensor::uniform(rng, {N, D}, -2, 2);
    Tape tape;
    auto res = attend(tape, params, h, keys);

    double sum = 0.0;
    for (double w : res.weights->data) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);

    for (int d = 0; d < D; ++d) {
      double lo = keys->at(0, d), hi = keys->at(0, d);
      for (int i = 1; i < N; ++i) {
        lo = std::min(lo, keys->at(i, d));
        hi = std::max(hi, keys->at(i, d));
      }
      CHECK(res.context->data[d] >= lo - 1e-12);
      CHECK(res.context->data[d] <= hi + 1e-12);
    }

    // permuting the regions must not move the context
    std::vector<int> perm(N);
    for (int i = 0; i < N; ++i) perm[i] = i;
    rng.shuffle(perm);
    auto permuted = Tensor::zeros({N, D});
    for (int i = 0; i < N; ++i)
      for (int d = 0; d < D; ++d) permuted->at(i, d) = keys->at(perm[i], d);
    auto res2 = attend(tape, params, h, permuted);
    for (int d = 0; d < D; ++d)
      CHECK(std::abs(res.context->data[d] - res2.context->data[d]) <= 1e-12);
    for (int i = 0; i < N; ++i)
      CHECK(std::abs(res2.weights->data[i] - res.weights->data[perm[i]]) <=
            1e-12);
  }
}

TEST_CASE("lstm_step: zero parameters give a zero hidden state") {
  Rng rng(41);
  LstmParams params = LstmParams::init(rng, 3, 4);
  for (double& v : params.w_input->data) v = 0.0;
  for (double& v : params.w_state->data) v = 0.0;
  for (double& v : params.bias->data) v = 0.0;
  Tape tape;
  auto state = lstm_step(tape, params, Tensor::uniform(rng, {3}, -1, 1),
                         lstm_zero_state(4));
  for (double v : state.h->data) CHECK(v == 0.0);
}

TEST_CASE("lstm_step: saturated gates carry the memory cell") {
  Rng rng(42);
  LstmParams params = LstmParams::init(rng, 2, 3);
  for (double& v : params.w_input->data) v = 0.0;
  for (double& v : params.w_state->data) v = 0.0;
  const int H = 3;
  for (int j = 0; j < H; ++j) {
    params.bias->data[j] = -40.0;      // input gate -> 0
    params.bias->data[H + j] = 40.0;   // forget gate -> 1
  }
  LstmState prev;
  prev.h = Tensor::zeros({H});
  prev.c = Tensor::from({H}, {0.3, -0.7, 0.9});
  Tape tape;
  auto state = lstm_step(tape, params, Tensor::uniform(rng, {2}, -1, 1), prev);
  for (int j = 0; j < H; ++j)
    CHECK(state.c->data[j] == doctest::Approx(prev.c->data[j]).epsilon(1e-9));
}

TEST_CASE("lstm_step matches the loop oracle on a random 4-dim case") {
  Rng rng(43);
  const int in_dim = 4, H = 4;
  LstmParams params = LstmParams::init(rng, in_dim, H);
  for (double& v : params.w_input->data) v = rng.uniform(-1, 1);
  for (double& v : params.w_state->data) v = rng.uniform(-1, 1);
  for (double& v : params.bias->data) v = rng.uniform(-1, 1);
  auto x = Tensor::uniform(rng, {in_dim}, -1, 1);
  LstmState prev;
  prev.h = Tensor::uniform(rng, {H}, -1, 1);
  prev.c = Tensor::uniform(rng, {H}, -1, 1);

  Tape tape;
  auto state = lstm_step(tape, params, x, prev);

  std::vector<double> h, c;
  lstm_step_oracle(params.w_input->data, params.w_state->data,
                   params.bias->data, x->data, prev.h->data, prev.c->data,
                   in_dim, H, h, c);
  for (int j = 0; j < H; ++j) {
    CHECK(state.h->data[j] == doctest::Approx(h[j]).epsilon(1e-12));
    CHECK(state.c->data[j] == doctest::Approx(c[j]).epsilon(1e-12));
  }
}

TEST_CASE("lstm_step invariants: h bounded, c finite, deterministic") {
  Rng rng(44);
  LstmParams params = LstmParams::init(rng, 3, 5);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = Tensor::uniform(rng, {3}, -10, 10);
    LstmState prev;
    prev.h = Tensor::uniform(rng, {5}, -1, 1);
    prev.c = Tensor::uniform(rng, {5}, -5, 5);
    Tape tape;
    auto s1 = lstm_step(tape, params, x, prev);
    auto s2 = lstm_step(tape, params, x, prev);
    for (int j = 0; j < 5; ++j) {
      CHECK(s1.h->data[j] > -1.0);
      CHECK(s1.h->data[j] < 1.0);
      CHECK(std::isfinite(s1.c->data[j]));
      CHECK(s1.h->data[j] == s2.h->data[j]);
      CHECK(s1.c->data[j] == s2.c->data[j]);
    }
  }
  auto bad = Tensor::zeros({7});
  Tape tape;
  CHECK_THROWS_AS(lstm_step(tape, params, bad, lstm_zero_state(5)),
                  DimensionError);
}

TEST_CASE("attentive step equals attend followed by lstm_step") {
  Rng rng(45);
  const int H = 4, D = 3, Em = 2;
  LstmParams cell = LstmParams::init(rng, Em + D, H);
  auto attn = random_attention(rng, H, D, 4);
  auto x = Tensor::uniform(rng, {Em}, -1, 1);
  auto keys = Tensor::uniform(rng, {2, D}, -1, 1);
  LstmState prev;
  prev.h = Tensor::uniform(rng, {H}, -1, 1);
  prev.c = Tensor::uniform(rng, {H}, -1, 1);

  Tape tape;
  auto fused = attentive_lstm_step(tape, cell, attn, x, keys, prev);
  auto att = attend(tape, attn, prev.h, keys);
  auto state = lstm_step(tape, cell, x, att.context, prev);
  for (int j = 0; j < H; ++j) {
    CHECK(fused.state.h->data[j] == state.h->data[j]);
    CHECK(fused.state.c->data[j] == state.c->data[j]);
  }

  // one region: identical to lstm_step on that region's feature
  auto one = Tensor::uniform(rng, {1, D}, -1, 1);
  auto fused1 = attentive_lstm_step(tape, cell, attn, x, one, prev);
  auto direct = lstm_step(tape, cell, x, ops::row(tape, one, 0), prev);
  for (int j = 0; j < H; ++j)
    CHECK(fused1.state.h->data[j] ==
          doctest::Approx(direct.h->data[j]).epsilon(1e-12));
}

TEST_CASE("word_dist: uniform under zero weights, sums to one, argmax") {
  Rng rng(46);
  const int H = 4, V = 6;
  OutputHead head = OutputHead::init(rng, H, V);
  Tape tape;

  OutputHead zero = head;
  zero.w = Tensor::zeros({V, H}, true);
  zero.b = Tensor::zeros({V}, true);
  auto p0 = word_dist(tape, zero, Tensor::uniform(rng, {H}, -1, 1));
  for (int v = 0; v < V; ++v)
    CHECK(p0->data[v] == doctest::Approx(1.0 / V).epsilon(1e-12));

  auto h = Tensor::uniform(rng, {H}, -3, 3);
  auto p = word_dist(tape, head, h);
  double sum = 0.0;
  for (double x : p->data) sum += x;
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  auto logits = ops::add(tape, ops::matvec(tape, head.w, h), head.b);
  int amax_logits = 0, amax_p = 0;
  for (int v = 1; v < V; ++v) {
    if (logits->data[v] > logits->data[amax_logits]) amax_logits = v;
    if (p->data[v] > p->data[amax_p]) amax_p = v;
  }
  CHECK(amax_logits == amax_p);
}

TEST_CASE("project_features: identity, per-region, oracle") {
  Rng rng(47);
  const int N = 3, Din = 4, Dout = 4;
  FeatureProjection identity;
  identity.w = Tensor::zeros({Dout, Din}, true);
  identity.b = Tensor::zeros({Dout}, true);
  for (int i = 0; i < Dout; ++i) identity.w->at(i, i) = 1.0;
  auto raw = Tensor::uniform(rng, {N, Din}, -1, 1);
  Tape tape;
  auto out = project_features(tape, identity, raw);
  CHECK(out->data == raw->data);

  FeatureProjection proj = FeatureProjection::init(rng, Din, 3);
  auto projected = project_features(tape, proj, raw);
  // per-row oracle
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < 3; ++d) {
      double acc = proj.b->data[d];
      for (int j = 0; j < Din; ++j) acc += proj.w->at(d, j) * raw->at(i, j);
      CHECK(projected->at(i, d) == doctest::Approx(acc).epsilon(1e-12));
    }

  // permutation equivariance
  auto swapped = Tensor::zeros({N, Din});
  const int perm[N] = {2, 0, 1};
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < Din; ++j) swapped->at(i, j) = raw->at(perm[i], j);
  auto projected_swapped = project_features(tape, proj, swapped);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < 3; ++d)
      CHECK(projected_swapped->at(i, d) == projected->at(perm[i], d));

  CHECK_THROWS_AS(project_features(tape, proj, Tensor::zeros({2, 7})),
                  DimensionError);
}

TEST_CASE("gradient through attention and cell matches finite differences") {
  Rng rng(48);
  const int H = 4, D = 3, Em = 2, N = 3, V = 5;
  LstmParams cell = LstmParams::init(rng, Em + D, H);
  auto attn = AttentionParams::init(rng, H, D, 4);
  OutputHead head = OutputHead::init(rng, H, V);
  auto E = Tensor::uniform(rng, {Em, V}, -0.5, 0.5, true);
  auto keys = Tensor::uniform(rng, {N, D}, -1, 1);

  NamedParams named;
  cell.collect("cell", named);
  attn.collect("attn", named);
  head.collect("head", named);
  named.emplace_back("embedding", E);
  std::vector<TensorPtr> params;
  for (auto& [n, t] : named) params.push_back(t);

  auto build = [&](Tape& t) -> TensorPtr {
    LstmState state = lstm_zero_state(H);
    auto x = embed(t, E, 0);
    auto s1 = attentive_lstm_step(t, cell, attn, x, keys, state);
    auto x2 = embed(t, E, 3);
    auto s2 = attentive_lstm_step(t, cell, attn, x2, keys, s1.state);
    auto p = word_dist(t, head, s2.state.h);
    return ops::nll_loss(t, p, 2);
  };
  CHECK(testutil::max_grad_rel_err(build, params) <= 1e-4);
}
