#ifndef AIRTIME_CRF_HPP
#define AIRTIME_CRF_HPP

#include "airtime/pose.hpp"
#include "airtime/tensor.hpp"

namespace airtime {

/// CRF state space: the 4 frame labels plus virtual boundary states. The
/// transition matrix A is [6,6]; A[START,y1] and A[yT,STOP] carry the
/// boundary terms of the path score.
inline constexpr int kCrfStates = kNumTags + 2;
inline constexpr int kCrfStart = 4;
inline constexpr int kCrfStop = 5;

/// Score assigned to hard-forbidden transitions. Never updated.
inline constexpr double kCrfForbidden = -1e9;

/// The flight grammar: O->O, O->B, B->I, I->I, I->E, E->O, START->{O,B},
/// {O,E}->STOP. Everything else (notably B->E: no flight without an in-air
/// frame) is forbidden.
bool crf_transition_allowed(int from, int to);

/// Write kCrfForbidden into every forbidden entry of a [6,6] matrix.
void crf_apply_mask(nn::Tensor& a);

/// Zero the forbidden entries of a gradient buffer. Paths through masked
/// transitions already carry exactly zero probability, so this only guards
/// against numeric surprises before an optimizer step.
void crf_mask_grad(nn::Tensor& grad);

struct LabelPath {
    TagSequence tags;
    double score = 0.0;
};

/// Path score: A[START,y1] + sum_i C[i,yi] + sum_i A[yi,yi+1] + A[yT,STOP].
double crf_score(const nn::Tensor& c, const TagSequence& y, const nn::Tensor& a);
nn::Var crf_score(const nn::Var& c, const TagSequence& y, const nn::Var& a);

/// Log of the sum of exp(score) over all 4^T label paths, via the forward
/// recursion in log space (max-shifted log-sum-exp at every step).
nn::Var crf_log_partition(const nn::Var& c, const nn::Var& a);

/// Negative log likelihood of the gold path: log_partition - score(gold).
/// Throws DataError when the gold labels violate the flight grammar (the
/// mask gives such paths probability zero).
nn::Var crf_nll(const nn::Var& c, const TagSequence& gold, const nn::Var& a);

/// Highest-scoring label path. Ties break toward the lowest label index at
/// every step, so the result is deterministic; with the masked transition
/// matrix the path always satisfies the flight grammar.
LabelPath viterbi_decode(const nn::Tensor& c, const nn::Tensor& a);

} // namespace airtime

#endif
