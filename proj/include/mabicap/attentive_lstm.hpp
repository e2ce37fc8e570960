#ifndef MABICAP_ATTENTIVE_LSTM_HPP_
#define MABICAP_ATTENTIVE_LSTM_HPP_

#include <string>
#include <utility>
#include <vector>

#include "mabicap/tensor.hpp"

namespace mabicap {

using NamedParams = std::vector<std::pair<std::string, TensorPtr>>;

inline constexpr double kInitRange = 0.08;
inline constexpr double kForgetGateBias = 1.0;

// Single-hidden-layer scoring perceptron: (query, key) -> tanh hidden ->
// scalar score. One score per key row; softmax over the rows gives the
// attention weights.
struct AttentionParams {
  TensorPtr w_hidden;  // [hidden x (query_dim + key_dim)]
  TensorPtr b_hidden;  // [hidden]
  TensorPtr w_score;   // [hidden]

  static AttentionParams init(Rng& rng, int query_dim, int key_dim,
                              int hidden);
  void collect(const std::string& prefix, NamedParams& out) const;
};

struct AttendResult {
  TensorPtr context;  // [key_dim] weighted sum of key rows
  TensorPtr weights;  // [n] probability vector over rows
};

// Soft attention: weights = softmax over rows of the perceptron score,
// context = weighted sum of the rows.
AttendResult attend(Tape& tape, const AttentionParams& params,
                    const TensorPtr& query, const TensorPtr& keys);

// Gate layout in the fused affine output: [input, forget, output, candidate].
struct LstmParams {
  TensorPtr w_input;  // [4H x input_size]
  TensorPtr w_state;  // [4H x H]
  TensorPtr bias;     // [4H]
  int input_size = 0;
  int hidden_size = 0;

  static LstmParams init(Rng& rng, int input_size, int hidden_size);
  void collect(const std::string& prefix, NamedParams& out) const;
};

struct LstmState {
  TensorPtr h;
  TensorPtr c;
};

LstmState lstm_zero_state(int hidden_size);

LstmState lstm_step(Tape& tape, const LstmParams& params,
                    const TensorPtr& input, const LstmState& prev);

// Convenience overload taking the word vector and the attended feature
// separately; they are concatenated into the cell input.
LstmState lstm_step(Tape& tape, const LstmParams& params, const TensorPtr& x,
                    const TensorPtr& z, const LstmState& prev);

struct AttentiveStepResult {
  LstmState state;
  TensorPtr attention;  // weights over feature rows
};

// One decoder step: attend with the previous hidden state over the feature
// rows, then advance the cell on [x ⊕ context]. Identical to calling attend
// and lstm_step in sequence.
AttentiveStepResult attentive_lstm_step(Tape& tape, const LstmParams& cell,
                                        const AttentionParams& attention,
                                        const TensorPtr& x_prev,
                                        const TensorPtr& features,
                                        const LstmState& prev);

// Column `token` of the embedding matrix [embed_dim x vocab].
TensorPtr embed(Tape& tape, const TensorPtr& embedding, int token);

// Affine map to vocabulary logits followed by softmax.
struct OutputHead {
  TensorPtr w;  // [vocab x H]
  TensorPtr b;  // [vocab]

  static OutputHead init(Rng& rng, int hidden_size, int vocab_size);
  void collect(const std::string& prefix, NamedParams& out) const;
};

TensorPtr word_dist(Tape& tape, const OutputHead& head, const TensorPtr& h);

// Shared per-region affine map for feature dimension reduction.
struct FeatureProjection {
  TensorPtr w;  // [out_dim x in_dim]
  TensorPtr b;  // [out_dim]

  static FeatureProjection init(Rng& rng, int in_dim, int out_dim);
  void collect(const std::string& prefix, NamedParams& out) const;
};

// Applies the projection independently to every row of raw [n x in_dim].
TensorPtr project_features(Tape& tape, const FeatureProjection& proj,
                           const TensorPtr& raw);

}  // namespace mabicap

#endif  // MABICAP_ATTENTIVE_LSTM_HPP_
