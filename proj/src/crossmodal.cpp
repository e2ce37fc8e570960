#include "mabicap/crossmodal.hpp"

#include "mabicap/errors.hpp"

namespace mabicap {

CrossModalParams CrossModalParams::init(Rng& rng, const ModelDims& dims,
                                        TensorPtr shared_embedding) {
  if (!shared_embedding || shared_embedding->ndim() != 2 ||
      shared_embedding->shape[0] != dims.embed_dim ||
      shared_embedding->shape[1] != dims.vocab_size)
    throw ConfigError("crossmodal: embedding does not match model dims");
  CrossModalParams p;
  p.dims = dims;
  p.visual_attn = AttentionParams::init(rng, dims.hidden_size,
                                        dims.feature_dim, dims.attn_hidden);
  p.semantic_attn = AttentionParams::init(rng, dims.hidden_size,
                                          dims.embed_dim, dims.attn_hidden);
  p.cell = LstmParams::init(
      rng, dims.embed_dim + dims.feature_dim + dims.embed_dim,
      dims.hidden_size);
  p.head = OutputHead::init(rng, dims.hidden_size, dims.vocab_size);
  p.embedding = std::move(shared_embedding);
  return p;
}

NamedParams CrossModalParams::named_params() const {
  NamedParams out;
  visual_attn.collect("visual_attn", out);
  semantic_attn.collect("semantic_attn", out);
  cell.collect("cell", out);
  head.collect("head", out);
  return out;
}

std::vector<TensorPtr> CrossModalParams::params() const {
  std::vector<TensorPtr> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

SemanticPool build_pool(Tape& tape, const TensorPtr& embedding,
                        const std::vector<int>& fwd_tokens,
                        const std::vector<int>& bwd_tokens, int unk_token) {
  const int vocab = embedding->shape[1];
  auto clamp_token = [vocab, unk_token](int t) {
    return (t < 0 || t >= vocab) ? unk_token : t;
  };
  std::vector<TensorPtr> rows;
  rows.reserve(fwd_tokens.size() + bwd_tokens.size());
  for (int t : fwd_tokens) rows.push_back(embed(tape, embedding, clamp_token(t)));
  for (int t : bwd_tokens) rows.push_back(embed(tape, embedding, clamp_token(t)));
  if (rows.empty()) throw DimensionError("build_pool: both sentences empty");
  SemanticPool pool;
  pool.embeddings = ops::stack_rows(tape, rows);
  pool.len_fwd = static_cast<int>(fwd_tokens.size());
  pool.len_bwd = static_cast<int>(bwd_tokens.size());
  return pool;
}

CrossModalStepResult crossmodal_step(Tape& tape, const CrossModalParams& params,
                                     const TensorPtr& x_prev,
                                     const TensorPtr& features,
                                     const SemanticPool& pool,
                                     const LstmState& prev) {
  auto visual = attend(tape, params.visual_attn, prev.h, features);
  auto semantic = attend(tape, params.semantic_attn, prev.h, pool.embeddings);
  auto input =
      ops::concat(tape, {x_prev, visual.context, semantic.context}, 0);
  auto state = lstm_step(tape, params.cell, input, prev);
  auto dist = word_dist(tape, params.head, state.h);
  return {state, dist, visual.weights, semantic.weights};
}

StepFn make_crossmodal_step(Tape& tape, const CrossModalParams& params,
                            const TensorPtr& features,
                            const SemanticPool& pool) {
  Tape* tp = &tape;
  const CrossModalParams* pp = &params;
  return [tp, pp, features, pool](int token, const DecoderState& state,
                                  DecoderState& next) {
    auto x = embed(*tp, pp->embedding, token);
    auto step = crossmodal_step(*tp, *pp, x, features, pool, state);
    next = step.state;
    return step.dist->data;
  };
}

RetouchResult retouch(const CrossModalParams& params, const TensorPtr& features,
                      const std::vector<int>& fwd_tokens,
                      const std::vector<int>& bwd_tokens,
                      const PairOptions& options) {
  Tape tape;
  tape.recording = false;
  const int unk = 2;
  auto pool = build_pool(tape, params.embedding, fwd_tokens, bwd_tokens, unk);
  auto step = make_crossmodal_step(tape, params, features, pool);
  const auto init = lstm_zero_state(params.dims.hidden_size);

  RetouchResult result;
  if (options.beam <= 1) {
    result.sentence = greedy_decode(step, init, options.start_token,
                                    options.end_token, options.max_len);
  } else {
    BeamOptions beam;
    beam.width = options.beam;
    beam.max_len = options.max_len;
    beam.length_normalize = options.length_normalize;
    result.sentence = beam_decode(step, init, options.start_token,
                                  options.end_token, beam);
  }

  // teacher-forced replay of the winner collects the attention traces
  LstmState state = init;
  const auto& tokens = result.sentence.tokens;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    auto x = embed(tape, params.embedding, tokens[i]);
    auto rstep = crossmodal_step(tape, params, x, features, pool, state);
    state = rstep.state;
    result.visual_weights.push_back(rstep.visual_weights->data);
    result.semantic_weights.push_back(rstep.semantic_weights->data);
  }
  return result;
}

double retoucher_train_step(CrossModalParams& params,
                            const std::vector<RetouchTrainItem>& batch,
                            const TrainOptions& options) {
  if (batch.empty()) throw ConfigError("retoucher_train_step: empty batch");
  Tape tape;
  const int unk = 2;
  TensorPtr sum = Tensor::scalar(0.0);
  int n_examples = 0;
  for (const auto& item : batch) {
    if (item.references.empty())
      throw ConfigError("retoucher_train_step: item without references");
    auto pool = build_pool(tape, params.embedding, item.fwd_tokens,
                           item.bwd_tokens, unk);
    for (const auto& ref : item.references) {
      if (ref.size() < 3 || ref.front() != options.start_token ||
          ref.back() != options.end_token)
        throw FormatError("retoucher_train_step: reference without sentinels");
      const int T = static_cast<int>(ref.size()) - 2;
      const int last = options.loss_range == LossRange::Full ? T + 1 : T;
      LstmState state = lstm_zero_state(params.dims.hidden_size);
      for (int t = 1; t <= last; ++t) {
        auto x = embed(tape, params.embedding, ref[t - 1]);
        auto step = crossmodal_step(tape, params, x, item.features, pool,
                                    state);
        state = step.state;
        sum = ops::add(tape, sum,
                       ops::nll_loss(tape, step.dist, ref[t]));
      }
      ++n_examples;
    }
  }
  auto mean = ops::scale(tape, sum, 1.0 / static_cast<double>(n_examples));
  const double loss_value = mean->value();
  ops::backward(tape, mean);
  ops::sgd_update(params.params(), options.lr);
  return loss_value;
}

}  // namespace mabicap
