#include "mabicap/mabi.hpp"

#include <algorithm>

#include "mabicap/errors.hpp"

namespace mabicap {

namespace {

void check_sentinels(const std::vector<int>& tokens, int start_token,
                     int end_token) {
  if (tokens.size() < 3 || tokens.front() != start_token ||
      tokens.back() != end_token)
    throw FormatError(
        "mabi_forward: sequence must be <start> w_1..w_T <end> with T >= 1");
}

}  // namespace

MabiParams MabiParams::init(Rng& rng, const ModelDims& dims, double lambda) {
  if (lambda < 0.0)
    throw ConfigError("mabi: lambda must be nonnegative, got " +
                      std::to_string(lambda));
  if (dims.vocab_size < 3)
    throw ConfigError("mabi: vocabulary must contain the special tokens");
  MabiParams p;
  p.dims = dims;
  p.lambda = lambda;
  p.embedding = Tensor::uniform(rng, {dims.embed_dim, dims.vocab_size},
                                -kInitRange, kInitRange, true);
  p.projection =
      FeatureProjection::init(rng, dims.raw_feature_dim, dims.feature_dim);
  const int cell_input = dims.embed_dim + dims.feature_dim;
  p.fwd_cell = LstmParams::init(rng, cell_input, dims.hidden_size);
  p.fwd_attn = AttentionParams::init(rng, dims.hidden_size, dims.feature_dim,
                                     dims.attn_hidden);
  p.fwd_head = OutputHead::init(rng, dims.hidden_size, dims.vocab_size);
  p.bwd_cell = LstmParams::init(rng, cell_input, dims.hidden_size);
  p.bwd_attn = AttentionParams::init(rng, dims.hidden_size, dims.feature_dim,
                                     dims.attn_hidden);
  p.bwd_head = OutputHead::init(rng, dims.hidden_size, dims.vocab_size);
  p.aid_fwd = LstmParams::init(rng, dims.hidden_size, dims.hidden_size);
  p.aid_bwd = LstmParams::init(rng, dims.hidden_size, dims.hidden_size);
  return p;
}

NamedParams MabiParams::named_params() const {
  NamedParams out;
  out.emplace_back("embedding", embedding);
  projection.collect("projection", out);
  fwd_cell.collect("fwd.cell", out);
  fwd_attn.collect("fwd.attn", out);
  fwd_head.collect("fwd.head", out);
  bwd_cell.collect("bwd.cell", out);
  bwd_attn.collect("bwd.attn", out);
  bwd_head.collect("bwd.head", out);
  aid_fwd.collect("aid_fwd", out);
  aid_bwd.collect("aid_bwd", out);
  return out;
}

std::vector<TensorPtr> MabiParams::params() const {
  std::vector<TensorPtr> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<TensorPtr> MabiParams::fwd_decoder_params() const {
  NamedParams named;
  fwd_cell.collect("cell", named);
  fwd_attn.collect("attn", named);
  fwd_head.collect("head", named);
  std::vector<TensorPtr> out;
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

std::vector<TensorPtr> MabiParams::bwd_decoder_params() const {
  NamedParams named;
  bwd_cell.collect("cell", named);
  bwd_attn.collect("attn", named);
  bwd_head.collect("head", named);
  std::vector<TensorPtr> out;
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

std::vector<TensorPtr> MabiParams::aid_params() const {
  NamedParams named;
  aid_fwd.collect("aid_fwd", named);
  aid_bwd.collect("aid_bwd", named);
  std::vector<TensorPtr> out;
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

TensorPtr MabiTrace::hf(int t) const { return hidden_fwd.at(t - 1); }
TensorPtr MabiTrace::hb(int t) const { return hidden_bwd.at(t); }
TensorPtr MabiTrace::haf(int t) const { return aid_fwd.at(t - 1); }
TensorPtr MabiTrace::hab(int t) const { return aid_bwd.at(t); }
TensorPtr MabiTrace::pf(int t) const { return dist_fwd.at(t - 1); }
TensorPtr MabiTrace::pb(int t) const { return dist_bwd.at(t); }

LossRange loss_range_from_string(const std::string& s) {
  if (s == "full") return LossRange::Full;
  if (s == "content") return LossRange::Content;
  throw ConfigError("loss_range must be 'full' or 'content', got '" + s + "'");
}

std::string to_string(LossRange range) {
  return range == LossRange::Full ? "full" : "content";
}

MabiTrace mabi_forward(Tape& tape, const MabiParams& params,
                       const TensorPtr& raw_features,
                       const std::vector<int>& tokens, int start_token,
                       int end_token) {
  check_sentinels(tokens, start_token, end_token);
  const int T = static_cast<int>(tokens.size()) - 2;

  MabiTrace trace;
  trace.T = T;
  auto features = project_features(tape, params.projection, raw_features);

  // forward decoder: h_f^(t) from x^(t-1), t = 1..T+1
  LstmState state = lstm_zero_state(params.dims.hidden_size);
  for (int t = 1; t <= T + 1; ++t) {
    auto x = embed(tape, params.embedding, tokens[t - 1]);
    auto step = attentive_lstm_step(tape, params.fwd_cell, params.fwd_attn, x,
                                    features, state);
    state = step.state;
    trace.hidden_fwd.push_back(state.h);
    trace.attn_fwd.push_back(step.attention);
    trace.dist_fwd.push_back(word_dist(tape, params.fwd_head, state.h));
  }

  // backward decoder: h_b^(t-1) from x^(t), t = T+1..1
  trace.hidden_bwd.resize(T + 1);
  trace.attn_bwd.resize(T + 1);
  trace.dist_bwd.resize(T + 1);
  state = lstm_zero_state(params.dims.hidden_size);
  for (int t = T + 1; t >= 1; --t) {
    auto x = embed(tape, params.embedding, tokens[t]);
    auto step = attentive_lstm_step(tape, params.bwd_cell, params.bwd_attn, x,
                                    features, state);
    state = step.state;
    trace.hidden_bwd[t - 1] = state.h;
    trace.attn_bwd[t - 1] = step.attention;
    trace.dist_bwd[t - 1] = word_dist(tape, params.bwd_head, state.h);
  }

  // forward aid cell walks h_f^(1)..h_f^(T+1)
  state = lstm_zero_state(params.dims.hidden_size);
  for (int t = 1; t <= T + 1; ++t) {
    state = lstm_step(tape, params.aid_fwd, trace.hf(t), state);
    trace.aid_fwd.push_back(state.h);
  }

  // backward aid cell walks h_b^(T)..h_b^(0)
  trace.aid_bwd.resize(T + 1);
  state = lstm_zero_state(params.dims.hidden_size);
  for (int t = T; t >= 0; --t) {
    state = lstm_step(tape, params.aid_bwd, trace.hb(t), state);
    trace.aid_bwd[t] = state.h;
  }
  return trace;
}

TensorPtr likelihood_loss(Tape& tape, const MabiTrace& trace,
                          const std::vector<int>& tokens, LossRange range) {
  const int T = trace.T;
  const int fwd_last = range == LossRange::Full ? T + 1 : T;
  const int bwd_first = range == LossRange::Full ? 0 : 1;
  TensorPtr loss = Tensor::scalar(0.0);
  for (int t = 1; t <= fwd_last; ++t)
    loss = ops::add(tape, loss, ops::nll_loss(tape, trace.pf(t), tokens[t]));
  for (int t = bwd_first; t <= T; ++t)
    loss = ops::add(tape, loss, ops::nll_loss(tape, trace.pb(t), tokens[t]));
  return loss;
}

TensorPtr construction_loss(Tape& tape, const MabiTrace& trace,
                            bool stop_gradient_targets) {
  TensorPtr loss = Tensor::scalar(0.0);
  for (int t = 1; t <= trace.T; ++t) {
    auto target_f = stop_gradient_targets ? ops::detach(trace.hf(t)) : trace.hf(t);
    auto target_b =
        stop_gradient_targets ? ops::detach(trace.hb(t - 1)) : trace.hb(t - 1);
    loss = ops::add(tape, loss,
                    ops::squared_error(tape, trace.hab(t - 1), target_f));
    loss = ops::add(tape, loss,
                    ops::squared_error(tape, trace.haf(t), target_b));
  }
  return loss;
}

TensorPtr total_loss(Tape& tape, const TensorPtr& l1, const TensorPtr& l2,
                     double lambda) {
  if (lambda < 0.0)
    throw ConfigError("total_loss: lambda must be nonnegative, got " +
                      std::to_string(lambda));
  return ops::add(tape, l1, ops::scale(tape, l2, lambda));
}

TrainStepStats mabi_train_step(MabiParams& params,
                               const std::vector<TrainItem>& batch,
                               const TrainOptions& options) {
  if (batch.empty()) throw ConfigError("mabi_train_step: empty batch");
  Tape tape;
  TensorPtr sum = Tensor::scalar(0.0);
  TrainStepStats stats;
  for (const auto& item : batch) {
    auto trace = mabi_forward(tape, params, item.raw_features, item.tokens,
                              options.start_token, options.end_token);
    auto l1 = likelihood_loss(tape, trace, item.tokens, options.loss_range);
    auto l2 = construction_loss(tape, trace, options.stop_gradient_targets);
    auto lt = total_loss(tape, l1, l2, params.lambda);
    stats.l1 += l1->value();
    stats.l2 += l2->value();
    stats.total += lt->value();
    sum = ops::add(tape, sum, lt);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  auto mean = ops::scale(tape, sum, inv);
  ops::backward(tape, mean);
  ops::sgd_update(params.params(), options.lr);
  stats.l1 *= inv;
  stats.l2 *= inv;
  stats.total *= inv;
  return stats;
}

StepFn make_mabi_step(Tape& tape, const MabiParams& params,
                      const TensorPtr& projected_features, Direction dir) {
  Tape* tp = &tape;
  const MabiParams* pp = &params;
  return [tp, pp, projected_features, dir](int token, const DecoderState& state,
                                           DecoderState& next) {
    const LstmParams& cell = dir == Direction::Forward ? pp->fwd_cell : pp->bwd_cell;
    const AttentionParams& attn =
        dir == Direction::Forward ? pp->fwd_attn : pp->bwd_attn;
    const OutputHead& head = dir == Direction::Forward ? pp->fwd_head : pp->bwd_head;
    auto x = embed(*tp, pp->embedding, token);
    auto step = attentive_lstm_step(*tp, cell, attn, x, projected_features,
                                    state);
    next = step.state;
    return word_dist(*tp, head, step.state.h)->data;
  };
}

GeneratedPair generate_pair(const MabiParams& params,
                            const TensorPtr& raw_features,
                            const PairOptions& options) {
  Tape tape;
  tape.recording = false;
  auto features = project_features(tape, params.projection, raw_features);
  const auto init = lstm_zero_state(params.dims.hidden_size);

  auto decode = [&](Direction dir, int start, int end) {
    auto step = make_mabi_step(tape, params, features, dir);
    if (options.beam <= 1)
      return greedy_decode(step, init, start, end, options.max_len);
    BeamOptions beam;
    beam.width = options.beam;
    beam.max_len = options.max_len;
    beam.length_normalize = options.length_normalize;
    return beam_decode(step, init, start, end, beam);
  };

  GeneratedPair pair;
  pair.fwd = decode(Direction::Forward, options.start_token, options.end_token);
  pair.bwd = decode(Direction::Backward, options.end_token, options.start_token);
  std::reverse(pair.bwd.tokens.begin(), pair.bwd.tokens.end());
  return pair;
}

std::vector<std::vector<double>> attention_trace(const MabiParams& params,
                                                 const TensorPtr& raw_features,
                                                 const std::vector<int>& tokens,
                                                 Direction dir) {
  Tape tape;
  tape.recording = false;
  auto features = project_features(tape, params.projection, raw_features);
  const LstmParams& cell = dir == Direction::Forward ? params.fwd_cell : params.bwd_cell;
  const AttentionParams& attn =
      dir == Direction::Forward ? params.fwd_attn : params.bwd_attn;
  std::vector<std::vector<double>> weights;
  LstmState state = lstm_zero_state(params.dims.hidden_size);
  // tokens are in decode order; the last token fed no further step
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    auto x = embed(tape, params.embedding, tokens[i]);
    auto step = attentive_lstm_step(tape, cell, attn, x, features, state);
    state = step.state;
    weights.push_back(step.attention->data);
  }
  return weights;
}

}  // namespace mabicap
