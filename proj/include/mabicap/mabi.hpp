#ifndef MABICAP_MABI_HPP_
#define MABICAP_MABI_HPP_

#include <string>
#include <vector>

#include "mabicap/attentive_lstm.hpp"
#include "mabicap/decoding.hpp"
#include "mabicap/tensor.hpp"

namespace mabicap {

// t-index conventions for a sentence S = (s^(0) .. s^(T+1)) with
// s^(0) = <start> and s^(T+1) = <end>:
//   forward decoder   consumes x^(0)..x^(T)     and emits h_f^(1)..h_f^(T+1)
//   backward decoder  consumes x^(T+1)..x^(1)   and emits h_b^(T)..h_b^(0)
//   forward aid cell  consumes h_f^(t) in t-order,        emits h_anf^(t)
//   backward aid cell consumes h_b^(t-1) in reverse order, emits h_anb^(t-1)

struct ModelDims {
  int vocab_size = 0;
  int embed_dim = 32;
  int feature_dim = 32;      // projected region feature size
  int raw_feature_dim = 32;  // region feature size on disk
  int hidden_size = 64;
  int attn_hidden = 64;
};

struct MabiParams {
  ModelDims dims;

  LstmParams fwd_cell, bwd_cell;        // input = embed_dim + feature_dim
  AttentionParams fwd_attn, bwd_attn;   // query H, keys feature_dim
  OutputHead fwd_head, bwd_head;
  LstmParams aid_fwd, aid_bwd;          // input = H, hidden = H
  TensorPtr embedding;                  // [embed_dim x vocab], shared
  FeatureProjection projection;         // raw_feature_dim -> feature_dim
  double lambda = 0.01;

  static MabiParams init(Rng& rng, const ModelDims& dims, double lambda);

  // Fixed, checkpoint-stable listing order.
  NamedParams named_params() const;
  std::vector<TensorPtr> params() const;
  // Parameters owned by one direction's decoder (cell + attention + head);
  // excludes the shared embedding and projection.
  std::vector<TensorPtr> fwd_decoder_params() const;
  std::vector<TensorPtr> bwd_decoder_params() const;
  std::vector<TensorPtr> aid_params() const;
};

// Hidden-state and word-distribution sequences of one forward pass, indexed
// by the paper-style accessors below (all vectors have T+1 entries).
struct MabiTrace {
  int T = 0;
  std::vector<TensorPtr> hidden_fwd;  // [i] = h_f^(i+1),  t = 1..T+1
  std::vector<TensorPtr> hidden_bwd;  // [i] = h_b^(i),    t = 0..T
  std::vector<TensorPtr> aid_fwd;     // [i] = h_anf^(i+1)
  std::vector<TensorPtr> aid_bwd;     // [i] = h_anb^(i)
  std::vector<TensorPtr> dist_fwd;    // [i] predicts s^(i+1)
  std::vector<TensorPtr> dist_bwd;    // [i] predicts s^(i)
  std::vector<TensorPtr> attn_fwd;    // attention weights at step t = i+1
  std::vector<TensorPtr> attn_bwd;    // attention weights when emitting h_b^(i)

  TensorPtr hf(int t) const;   // t in [1, T+1]
  TensorPtr hb(int t) const;   // t in [0, T]
  TensorPtr haf(int t) const;  // t in [1, T+1]
  TensorPtr hab(int t) const;  // t in [0, T]
  TensorPtr pf(int t) const;   // t in [1, T+1]
  TensorPtr pb(int t) const;   // t in [0, T]
};

// Which prediction terms enter the likelihood loss. Full adds the forward
// <end> prediction and the backward <start> prediction so both decoders
// learn to terminate; Content keeps the sums at t = 1..T.
enum class LossRange { Full, Content };

LossRange loss_range_from_string(const std::string& s);
std::string to_string(LossRange range);

// Runs both decoders and both aid cells over a teacher-forced sentence.
// tokens must start with start_token and end with end_token and contain at
// least one content word.
MabiTrace mabi_forward(Tape& tape, const MabiParams& params,
                       const TensorPtr& raw_features,
                       const std::vector<int>& tokens, int start_token,
                       int end_token);

// Sum of the two directions' negative log-likelihoods.
TensorPtr likelihood_loss(Tape& tape, const MabiTrace& trace,
                          const std::vector<int>& tokens, LossRange range);

// Construction error: pairs h_anb^(t-1) with h_f^(t) and h_anf^(t) with
// h_b^(t-1), t = 1..T. With stop_gradient_targets the main decoders' states
// are detached, so only the aid cells feel this loss.
TensorPtr construction_loss(Tape& tape, const MabiTrace& trace,
                            bool stop_gradient_targets);

// l1 + lambda * l2
TensorPtr total_loss(Tape& tape, const TensorPtr& l1, const TensorPtr& l2,
                     double lambda);

struct TrainItem {
  TensorPtr raw_features;   // [n_regions x raw_feature_dim]
  std::vector<int> tokens;  // sentinel-wrapped token indices
};

struct TrainStepStats {
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

struct TrainOptions {
  double lr = 0.1;
  LossRange loss_range = LossRange::Full;
  bool stop_gradient_targets = false;
  int start_token = 0;
  int end_token = 1;
};

// One SGD step on the batch-mean total loss.
TrainStepStats mabi_train_step(MabiParams& params,
                               const std::vector<TrainItem>& batch,
                               const TrainOptions& options);

struct PairOptions {
  int beam = 3;  // 1 = greedy
  int max_len = 20;
  bool length_normalize = false;
  int start_token = 0;
  int end_token = 1;
};

struct GeneratedPair {
  DecodedSentence fwd;  // reading order, starts with <start>
  DecodedSentence bwd;  // decoded back-to-front, returned in reading order
};

// Decodes one sentence per direction. The aid cells are not consulted; their
// influence lives in the trained decoder weights. The backward sentence is
// reversed into reading order before returning.
GeneratedPair generate_pair(const MabiParams& params,
                            const TensorPtr& raw_features,
                            const PairOptions& options);

// Step adapter for the decoders; exposed for reuse by evaluation code.
enum class Direction { Forward, Backward };
StepFn make_mabi_step(Tape& tape, const MabiParams& params,
                      const TensorPtr& projected_features, Direction dir);

// Teacher-forced replay that collects the per-step attention weights of one
// direction (rows: step, region, weight).
std::vector<std::vector<double>> attention_trace(const MabiParams& params,
                                                 const TensorPtr& raw_features,
                                                 const std::vector<int>& tokens,
                                                 Direction dir);

}  // namespace mabicap

#endif  // MABICAP_MABI_HPP_
