#include "mabicap/attentive_lstm.hpp"

#include "mabicap/errors.hpp"

namespace mabicap {

AttentionParams AttentionParams::init(Rng& rng, int query_dim, int key_dim,
                                      int hidden) {
  if (hidden < 1)
    throw ConfigError("attention: hidden size must be positive");
  AttentionParams p;
  p.w_hidden = Tensor::uniform(rng, {hidden, query_dim + key_dim}, -kInitRange,
                               kInitRange, true);
  p.b_hidden = Tensor::uniform(rng, {hidden}, -kInitRange, kInitRange, true);
  p.w_score = Tensor::uniform(rng, {hidden}, -kInitRange, kInitRange, true);
  return p;
}

void AttentionParams::collect(const std::string& prefix,
                              NamedParams& out) const {
  out.emplace_back(prefix + ".w_hidden", w_hidden);
  out.emplace_back(prefix + ".b_hidden", b_hidden);
  out.emplace_back(prefix + ".w_score", w_score);
}

AttendResult attend(Tape& tape, const AttentionParams& params,
                    const TensorPtr& query, const TensorPtr& keys) {
  if (keys->ndim() != 2)
    throw DimensionError("attend: keys must be [n x dim], got " +
                         keys->shape_str());
  const int n = keys->shape[0];
  std::vector<TensorPtr> scores;
  scores.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto key = ops::row(tape, keys, i);
    auto joint = ops::concat(tape, {query, key}, 0);
    auto hidden = ops::tanh(
        tape, ops::add(tape, ops::matvec(tape, params.w_hidden, joint),
                       params.b_hidden));
    scores.push_back(ops::dot(tape, params.w_score, hidden));
  }
  auto weights = ops::softmax(tape, ops::concat(tape, scores, 0));
  auto context = ops::matvec_t(tape, keys, weights);
  return {context, weights};
}

LstmParams LstmParams::init(Rng& rng, int input_size, int hidden_size) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = Tensor::uniform(rng, {4 * hidden_size, input_size}, -kInitRange,
                              kInitRange, true);
  p.w_state = Tensor::uniform(rng, {4 * hidden_size, hidden_size}, -kInitRange,
                              kInitRange, true);
  p.bias = Tensor::uniform(rng, {4 * hidden_size}, -kInitRange, kInitRange,
                           true);
  // forget-gate bias starts high so early training keeps its memory
  for (int i = hidden_size; i < 2 * hidden_size; ++i)
    p.bias->data[i] = kForgetGateBias;
  return p;
}

void LstmParams::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".w_input", w_input);
  out.emplace_back(prefix + ".w_state", w_state);
  out.emplace_back(prefix + ".bias", bias);
}

LstmState lstm_zero_state(int hidden_size) {
  return {Tensor::zeros({hidden_size}), Tensor::zeros({hidden_size})};
}

LstmState lstm_step(Tape& tape, const LstmParams& params,
                    const TensorPtr& input, const LstmState& prev) {
  if (input->ndim() != 1 || input->shape[0] != params.input_size)
    throw DimensionError("lstm_step: input " + input->shape_str() +
                         " does not match cell input size " +
                         std::to_string(params.input_size));
  const int H = params.hidden_size;
  auto gates = ops::add(
      tape,
      ops::add(tape, ops::matvec(tape, params.w_input, input),
               ops::matvec(tape, params.w_state, prev.h)),
      params.bias);
  auto gate_in = ops::sigmoid(tape, ops::slice(tape, gates, 0, H));
  auto gate_forget = ops::sigmoid(tape, ops::slice(tape, gates, H, H));
  auto gate_out = ops::sigmoid(tape, ops::slice(tape, gates, 2 * H, H));
  auto candidate = ops::tanh(tape, ops::slice(tape, gates, 3 * H, H));
  auto c = ops::add(tape, ops::mul(tape, gate_forget, prev.c),
                    ops::mul(tape, gate_in, candidate));
  auto h = ops::mul(tape, gate_out, ops::tanh(tape, c));
  return {h, c};
}

LstmState lstm_step(Tape& tape, const LstmParams& params, const TensorPtr& x,
                    const TensorPtr& z, const LstmState& prev) {
  return lstm_step(tape, params, ops::concat(tape, {x, z}, 0), prev);
}

AttentiveStepResult attentive_lstm_step(Tape& tape, const LstmParams& cell,
                                        const AttentionParams& attention,
                                        const TensorPtr& x_prev,
                                        const TensorPtr& features,
                                        const LstmState& prev) {
  auto att = attend(tape, attention, prev.h, features);
  auto state = lstm_step(tape, cell, x_prev, att.context, prev);
  return {state, att.weights};
}

TensorPtr embed(Tape& tape, const TensorPtr& embedding, int token) {
  return ops::select_col(tape, embedding, token);
}

OutputHead OutputHead::init(Rng& rng, int hidden_size, int vocab_size) {
  OutputHead head;
  head.w = Tensor::uniform(rng, {vocab_size, hidden_size}, -kInitRange,
                           kInitRange, true);
  head.b = Tensor::uniform(rng, {vocab_size}, -kInitRange, kInitRange, true);
  return head;
}

void OutputHead::collect(const std::string& prefix, NamedParams& out) const {
  out.emplace_back(prefix + ".w", w);
  out.emplace_back(prefix + ".b", b);
}

TensorPtr word_dist(Tape& tape, const OutputHead& head, const TensorPtr& h) {
  return ops::softmax(
      tape, ops::add(tape, ops::matvec(tape, head.w, h), head.b));
}

FeatureProjection FeatureProjection::init(Rng& rng, int in_dim, int out_dim) {
  FeatureProjection proj;
  proj.w = Tensor::uniform(rng, {out_dim, in_dim}, -kInitRange, kInitRange,
                           true);
  proj.b = Tensor::uniform(rng, {out_dim}, -kInitRange, kInitRange, true);
  return proj;
}

void FeatureProjection::collect(const std::string& prefix,
                                NamedParams& out) const {
  out.emplace_back(prefix + ".w", w);
  out.emplace_back(prefix + ".b", b);
}

TensorPtr project_features(Tape& tape, const FeatureProjection& proj,
                           const TensorPtr& raw) {
  if (raw->ndim() != 2 || raw->shape[1] != proj.w->shape[1])
    throw DimensionError("project_features: features " + raw->shape_str() +
                         " do not match projection " + proj.w->shape_str());
  const int n = raw->shape[0];
  std::vector<TensorPtr> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto r = ops::row(tape, raw, i);
    rows.push_back(
        ops::add(tape, ops::matvec(tape, proj.w, r), proj.b));
  }
  return ops::stack_rows(tape, rows);
}

}  // namespace mabicap
