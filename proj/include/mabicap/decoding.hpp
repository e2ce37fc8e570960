#ifndef MABICAP_DECODING_HPP_
#define MABICAP_DECODING_HPP_

#include <functional>
#include <vector>

#include "mabicap/attentive_lstm.hpp"
#include "mabicap/tensor.hpp"

namespace mabicap {

// The decoders drive an abstract step function: consume the previous token
// given the current recurrent state, fill the successor state, and return
// the probability distribution over the vocabulary for the next token.
using DecoderState = LstmState;
using StepFn = std::function<std::vector<double>(
    int prev_token, const DecoderState& state, DecoderState& next)>;

struct DecodedSentence {
  std::vector<int> tokens;  // includes the start token; ends with the end
                            // token unless truncated
  double logprob = 0.0;
  bool truncated = false;
};

// A partial sentence tracked by beam search. The cumulative log-probability
// only decreases as tokens append; finished hypotheses never extend.
struct Hypothesis {
  std::vector<int> tokens;
  double logprob = 0.0;
  DecoderState state;
  bool finished = false;
};

struct BeamOptions {
  int width = 3;
  int max_len = 20;
  // Compare hypotheses by logprob / generated-token-count instead of raw
  // logprob. Off by default.
  bool length_normalize = false;
};

// Appends the argmax token each step (ties go to the lowest token index)
// until the end token or max_len generated tokens.
DecodedSentence greedy_decode(const StepFn& step, const DecoderState& init,
                              int start_token, int end_token, int max_len);

// Classic beam search. Every live hypothesis expands by its `width` most
// probable tokens; expansions that hit the end token retire to the finished
// pool, and the best `width` unfinished expansions form the next beam.
// Returns the best finished hypothesis, or the best live one (flagged
// truncated) if nothing finished within max_len.
//
// finished_pool, when given, receives every finished hypothesis sorted best
// first. beam_trace, when given, receives the live beam after each step.
DecodedSentence beam_decode(const StepFn& step, const DecoderState& init,
                            int start_token, int end_token,
                            const BeamOptions& options,
                            std::vector<Hypothesis>* finished_pool = nullptr,
                            std::vector<std::vector<Hypothesis>>* beam_trace = nullptr);

}  // namespace mabicap

#endif  // MABICAP_DECODING_HPP_
