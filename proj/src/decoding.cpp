#include "mabicap/decoding.hpp"

#include <algorithm>
#include <cmath>

#include "mabicap/errors.hpp"

namespace mabicap {

namespace {

int argmax_lowest(const std::vector<double>& p) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(p.size()); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

double hyp_score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize) return h.logprob;
  const int generated = std::max<int>(1, static_cast<int>(h.tokens.size()) - 1);
  return h.logprob / generated;
}

// Orders hypotheses best-first: higher score, then lexicographically smaller
// token sequence. Sequences in one beam are always distinct, so the order is
// total; stable sorts preserve insertion order anyway.
struct BetterHyp {
  bool length_normalize;
  bool operator()(const Hypothesis& a, const Hypothesis& b) const {
    const double sa = hyp_score(a, length_normalize);
    const double sb = hyp_score(b, length_normalize);
    if (sa != sb) return sa > sb;
    return a.tokens < b.tokens;
  }
};

}  // namespace

DecodedSentence greedy_decode(const StepFn& step, const DecoderState& init,
                              int start_token, int end_token, int max_len) {
  if (max_len < 1)
    throw ConfigError("greedy_decode: max_len must be >= 1, got " +
                      std::to_string(max_len));
  DecodedSentence out;
  out.tokens.push_back(start_token);
  DecoderState state = init;
  int token = start_token;
  for (int t = 0; t < max_len; ++t) {
    DecoderState next;
    std::vector<double> p = step(token, state, next);
    if (p.empty()) throw ContractError("greedy_decode: empty distribution");
    token = argmax_lowest(p);
    out.logprob += std::log(p[token]);
    out.tokens.push_back(token);
    state = next;
    if (token == end_token) return out;
  }
  out.truncated = true;
  return out;
}

DecodedSentence beam_decode(const StepFn& step, const DecoderState& init,
                            int start_token, int end_token,
                            const BeamOptions& options,
                            std::vector<Hypothesis>* finished_pool,
                            std::vector<std::vector<Hypothesis>>* beam_trace) {
  if (options.width < 1)
    throw ConfigError("beam_decode: width must be >= 1, got " +
                      std::to_string(options.width));
  if (options.max_len < 1)
    throw ConfigError("beam_decode: max_len must be >= 1, got " +
                      std::to_string(options.max_len));
  const BetterHyp better{options.length_normalize};

  std::vector<Hypothesis> live;
  live.push_back(Hypothesis{{start_token}, 0.0, init, false});
  std::vector<Hypothesis> pool;

  for (int t = 0; t < options.max_len && !live.empty(); ++t) {
    std::vector<Hypothesis> candidates;
    candidates.reserve(live.size() * options.width);
    for (const auto& hyp : live) {
      DecoderState next;
      std::vector<double> p = step(hyp.tokens.back(), hyp.state, next);
      if (p.empty()) throw ContractError("beam_decode: empty distribution");
      const int vocab = static_cast<int>(p.size());
      const int expand = std::min(options.width, vocab);
      std::vector<int> order(vocab);
      for (int i = 0; i < vocab; ++i) order[i] = i;
      std::partial_sort(order.begin(), order.begin() + expand, order.end(),
                        [&p](int a, int b) {
                          if (p[a] != p[b]) return p[a] > p[b];
                          return a < b;
                        });
      for (int e = 0; e < expand; ++e) {
        const int token = order[e];
        Hypothesis cand;
        cand.tokens = hyp.tokens;
        cand.tokens.push_back(token);
        cand.logprob = hyp.logprob + std::log(p[token]);
        cand.state = next;
        cand.finished = token == end_token;
        candidates.push_back(std::move(cand));
      }
    }
    live.clear();
    std::sort(candidates.begin(), candidates.end(), better);
    for (auto& cand : candidates) {
      if (cand.finished)
        pool.push_back(std::move(cand));
      else if (static_cast<int>(live.size()) < options.width)
        live.push_back(std::move(cand));
    }
    if (beam_trace) beam_trace->push_back(live);
  }

  DecodedSentence out;
  if (!pool.empty()) {
    std::sort(pool.begin(), pool.end(), better);
    out.tokens = pool.front().tokens;
    out.logprob = pool.front().logprob;
  } else {
    const auto best = std::min_element(
        live.begin(), live.end(),
        [&better](const Hypothesis& a, const Hypothesis& b) {
          return better(a, b);
        });
    out.tokens = best->tokens;
    out.logprob = best->logprob;
    out.truncated = true;
  }
  if (finished_pool) *finished_pool = pool;
  return out;
}

}  // namespace mabicap
