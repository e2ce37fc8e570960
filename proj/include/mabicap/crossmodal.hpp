#ifndef MABICAP_CROSSMODAL_HPP_
#define MABICAP_CROSSMODAL_HPP_

#include <vector>

#include "mabicap/attentive_lstm.hpp"
#include "mabicap/decoding.hpp"
#include "mabicap/mabi.hpp"
#include "mabicap/tensor.hpp"

namespace mabicap {

// Retouching decoder: one LSTM whose input fuses the previous word with two
// separately normalized attention contexts, a visual one over region
// features and a semantic one over the word embeddings of the two
// pre-generated sentences.
struct CrossModalParams {
  ModelDims dims;
  AttentionParams visual_attn;    // keys: projected region features
  AttentionParams semantic_attn;  // keys: pooled word embeddings
  LstmParams cell;                // input = embed + feature + embed
  OutputHead head;
  TensorPtr embedding;            // shared with the pair generator; frozen here

  static CrossModalParams init(Rng& rng, const ModelDims& dims,
                               TensorPtr shared_embedding);

  // Retoucher-owned parameters only; the shared embedding is excluded.
  NamedParams named_params() const;
  std::vector<TensorPtr> params() const;
};

// Word embeddings of the forward sentence followed by the backward one,
// sentinels included.
struct SemanticPool {
  TensorPtr embeddings;  // [(len_fwd + len_bwd) x embed_dim]
  int len_fwd = 0;
  int len_bwd = 0;
};

// Tokens outside the vocabulary map to unk_token; this never raises.
SemanticPool build_pool(Tape& tape, const TensorPtr& embedding,
                        const std::vector<int>& fwd_tokens,
                        const std::vector<int>& bwd_tokens, int unk_token);

struct CrossModalStepResult {
  LstmState state;
  TensorPtr dist;              // word distribution
  TensorPtr visual_weights;    // over feature rows
  TensorPtr semantic_weights;  // over pool rows
};

CrossModalStepResult crossmodal_step(Tape& tape, const CrossModalParams& params,
                                     const TensorPtr& x_prev,
                                     const TensorPtr& features,
                                     const SemanticPool& pool,
                                     const LstmState& prev);

StepFn make_crossmodal_step(Tape& tape, const CrossModalParams& params,
                            const TensorPtr& features, const SemanticPool& pool);

struct RetouchResult {
  DecodedSentence sentence;
  // per generated step, in decode order
  std::vector<std::vector<double>> visual_weights;
  std::vector<std::vector<double>> semantic_weights;
};

// Decodes the final sentence from the projected features and the two
// pre-generated sentences; the attention traces come from a teacher-forced
// replay of the winning sentence.
RetouchResult retouch(const CrossModalParams& params, const TensorPtr& features,
                      const std::vector<int>& fwd_tokens,
                      const std::vector<int>& bwd_tokens,
                      const PairOptions& options);

struct RetouchTrainItem {
  TensorPtr features;  // already projected, [n x feature_dim]
  std::vector<int> fwd_tokens;
  std::vector<int> bwd_tokens;
  std::vector<std::vector<int>> references;  // sentinel-wrapped captions
};

// One SGD step on the mean reference NLL. Only the retoucher's own
// parameters move; the shared embedding must be frozen by the caller
// (requires_grad = false) for phase separation.
double retoucher_train_step(CrossModalParams& params,
                            const std::vector<RetouchTrainItem>& batch,
                            const TrainOptions& options);

}  // namespace mabicap

#endif  // MABICAP_CROSSMODAL_HPP_
