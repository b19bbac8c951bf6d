#include "airtime/crf.hpp"

#include <string>
#include <utility>
#include <vector>

#include "airtime/error.hpp"
#include "airtime/tags.hpp"

namespace airtime {

namespace {

constexpr int kO = static_cast<int>(Tag::O);
constexpr int kB = static_cast<int>(Tag::B);
constexpr int kI = static_cast<int>(Tag::I);
constexpr int kE = static_cast<int>(Tag::E);

void check_shapes(const nn::Tensor& c, const nn::Tensor& a) {
    if (c.cols() != static_cast<std::size_t>(kNumTags))
        throw ShapeError("crf: emissions must have " + std::to_string(kNumTags) + " columns, got " +
                         std::to_string(c.cols()));
    if (c.rows() == 0) throw ShapeError("crf: empty emission matrix");
    if (a.rows() != kCrfStates || a.cols() != kCrfStates)
        throw ShapeError("crf: transition matrix must be " + std::to_string(kCrfStates) + "x" +
                         std::to_string(kCrfStates));
}

void check_labels(const TagSequence& y, std::size_t t) {
    if (y.size() != t)
        throw ShapeError("crf: " + std::to_string(y.size()) + " labels for " + std::to_string(t) + " frames");
}

} // namespace

bool crf_transition_allowed(int from, int to) {
    if (from == kCrfStop || to == kCrfStart) return false;
    if (from == kCrfStart) return to == kO || to == kB;
    if (to == kCrfStop) return from == kO || from == kE;
    switch (from) {
        case kO: return to == kO || to == kB;
        case kB: return to == kI;
        case kI: return to == kI || to == kE;
        case kE: return to == kO;
        default: return false;
    }
}

void crf_apply_mask(nn::Tensor& a) {
    if (a.rows() != kCrfStates || a.cols() != kCrfStates) throw ShapeError("crf_apply_mask: matrix must be 6x6");
    for (int i = 0; i < kCrfStates; ++i)
        for (int j = 0; j < kCrfStates; ++j)
            if (!crf_transition_allowed(i, j)) a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = kCrfForbidden;
}

void crf_mask_grad(nn::Tensor& grad) {
    if (grad.rows() != kCrfStates || grad.cols() != kCrfStates) throw ShapeError("crf_mask_grad: matrix must be 6x6");
    for (int i = 0; i < kCrfStates; ++i)
        for (int j = 0; j < kCrfStates; ++j)
            if (!crf_transition_allowed(i, j)) grad(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 0.0;
}

double crf_score(const nn::Tensor& c, const TagSequence& y, const nn::Tensor& a) {
    check_shapes(c, a);
    check_labels(y, c.rows());
    double s = a(kCrfStart, static_cast<std::size_t>(y[0]));
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += c(i, static_cast<std::size_t>(y[i]));
        if (i + 1 < y.size()) s += a(static_cast<std::size_t>(y[i]), static_cast<std::size_t>(y[i + 1]));
    }
    s += a(static_cast<std::size_t>(y.back()), kCrfStop);
    return s;
}

nn::Var crf_score(const nn::Var& c, const TagSequence& y, const nn::Var& a) {
    check_shapes(c->value, a->value);
    check_labels(y, c->value.rows());
    std::vector<std::pair<std::size_t, std::size_t>> emit_idx, trans_idx;
    emit_idx.reserve(y.size());
    trans_idx.reserve(y.size() + 1);
    trans_idx.emplace_back(kCrfStart, static_cast<std::size_t>(y[0]));
    for (std::size_t i = 0; i < y.size(); ++i) {
        emit_idx.emplace_back(i, static_cast<std::size_t>(y[i]));
        if (i + 1 < y.size()) trans_idx.emplace_back(static_cast<std::size_t>(y[i]), static_cast<std::size_t>(y[i + 1]));
    }
    trans_idx.emplace_back(static_cast<std::size_t>(y.back()), kCrfStop);
    return nn::add(nn::select_sum(c, std::move(emit_idx)), nn::select_sum(a, std::move(trans_idx)));
}

nn::Var crf_log_partition(const nn::Var& c, const nn::Var& a) {
    check_shapes(c->value, a->value);
    const std::size_t t = c->value.rows();
    const std::size_t k = static_cast<std::size_t>(kNumTags);

    nn::Var trans = nn::block(a, 0, k, 0, k);                       // label-to-label scores
    nn::Var alpha = nn::add(nn::block(a, kCrfStart, 1, 0, k), nn::block(c, 0, 1, 0, k));
    for (std::size_t i = 1; i < t; ++i) {
        nn::Var scores = nn::add(nn::broadcast_cols(nn::transpose(alpha), k), trans);
        alpha = nn::add(nn::logsumexp_cols(scores), nn::block(c, i, 1, 0, k));
    }
    nn::Var stop = nn::block(a, 0, k, kCrfStop, 1);
    return nn::logsumexp_cols(nn::add(nn::transpose(alpha), stop));
}

nn::Var crf_nll(const nn::Var& c, const TagSequence& gold, const nn::Var& a) {
    if (!tags_grammar_valid(gold))
        throw DataError("gold labels violate the flight grammar: " + tags_to_string(gold));
    return nn::sub(crf_log_partition(c, a), crf_score(c, gold, a));
}

LabelPath viterbi_decode(const nn::Tensor& c, const nn::Tensor& a) {
    check_shapes(c, a);
    const std::size_t t = c.rows();
    const std::size_t k = static_cast<std::size_t>(kNumTags);

    std::vector<std::vector<double>> delta(t, std::vector<double>(k));
    std::vector<std::vector<int>> from(t, std::vector<int>(k, 0));
    for (std::size_t j = 0; j < k; ++j) delta[0][j] = a(kCrfStart, j) + c(0, j);
    for (std::size_t i = 1; i < t; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double best = delta[i - 1][0] + a(0, j);
            int arg = 0;
            for (std::size_t p = 1; p < k; ++p) {
                const double s = delta[i - 1][p] + a(p, j);
                if (s > best) {
                    best = s;
                    arg = static_cast<int>(p);
                }
            }
            delta[i][j] = best + c(i, j);
            from[i][j] = arg;
        }
    }

    double best = delta[t - 1][0] + a(0, kCrfStop);
    int arg = 0;
    for (std::size_t j = 1; j < k; ++j) {
        const double s = delta[t - 1][j] + a(j, kCrfStop);
        if (s > best) {
            best = s;
            arg = static_cast<int>(j);
        }
    }

    LabelPath path;
    path.score = best;
    path.tags.resize(t);
    for (std::size_t i = t; i-- > 0;) {
        path.tags[i] = static_cast<Tag>(arg);
        arg = from[i][arg];
    }
    return path;
}

} // namespace airtime
