#include "airtime/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "airtime/error.hpp"
#include "airtime/tags.hpp"

namespace airtime {

namespace {

void check_same_lengths(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
    if (gold.size() != pred.size())
        throw DataError("metrics: " + std::to_string(gold.size()) + " gold videos vs " + std::to_string(pred.size()) +
                        " predictions");
    for (std::size_t v = 0; v < gold.size(); ++v) {
        if (gold[v].size() != pred[v].size())
            throw DataError("metrics: video " + std::to_string(v) + " has " + std::to_string(gold[v].size()) +
                            " gold frames vs " + std::to_string(pred[v].size()) + " predicted");
    }
}

} // namespace

double frame_accuracy(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
    check_same_lengths(gold, pred);
    std::size_t total = 0, hit = 0;
    for (std::size_t v = 0; v < gold.size(); ++v) {
        total += gold[v].size();
        for (std::size_t i = 0; i < gold[v].size(); ++i) hit += gold[v][i] == pred[v][i];
    }
    if (total == 0) throw DataError("metrics: no frames to score");
    return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

double macro_f1(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
    check_same_lengths(gold, pred);
    std::size_t tp[kNumTags] = {}, fp[kNumTags] = {}, fn[kNumTags] = {};
    for (std::size_t v = 0; v < gold.size(); ++v) {
        for (std::size_t i = 0; i < gold[v].size(); ++i) {
            const int g = static_cast<int>(gold[v][i]);
            const int p = static_cast<int>(pred[v][i]);
            if (g == p) {
                ++tp[g];
            } else {
                ++fp[p];
                ++fn[g];
            }
        }
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < kNumTags; ++c) {
        if (tp[c] + fp[c] + fn[c] == 0) continue; // label absent from both sides
        ++present;
        sum += 2.0 * tp[c] / static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    }
    if (present == 0) throw DataError("metrics: no frames to score");
    return sum / present;
}

std::vector<SpanMatch> match_spans(const std::vector<FlightSpan>& pred, const std::vector<FlightSpan>& gold) {
    struct Candidate {
        int overlap;
        std::size_t gold_idx;
        std::size_t pred_idx;
    };
    std::vector<Candidate> cands;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        for (std::size_t g = 0; g < gold.size(); ++g) {
            const int lo = std::max(pred[p].start, gold[g].start);
            const int hi = std::min(pred[p].end, gold[g].end);
            if (hi >= lo) cands.push_back({hi - lo + 1, g, p});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.gold_idx != b.gold_idx) return a.gold_idx < b.gold_idx;
        return a.pred_idx < b.pred_idx;
    });

    std::vector<SpanMatch> out(pred.size());
    for (std::size_t p = 0; p < pred.size(); ++p) out[p].pred = pred[p];
    std::vector<bool> gold_used(gold.size(), false), pred_used(pred.size(), false);
    for (const Candidate& c : cands) {
        if (gold_used[c.gold_idx] || pred_used[c.pred_idx]) continue;
        gold_used[c.gold_idx] = true;
        pred_used[c.pred_idx] = true;
        out[c.pred_idx].matched = true;
        out[c.pred_idx].gold = gold[c.gold_idx];
        out[c.pred_idx].overlap = c.overlap;
    }
    return out;
}

std::optional<double> mean_error_percentage(const std::vector<SpanMatch>& matches) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const SpanMatch& m : matches) {
        if (!m.matched) continue;
        ++n;
        sum += 100.0 * std::abs(span_air_frames(m.pred) - span_air_frames(m.gold)) /
               static_cast<double>(span_air_frames(m.gold));
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

int edit_distance(const TagSequence& a, const TagSequence& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double avg_edit_distance(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
    check_same_lengths(gold, pred);
    if (gold.empty()) throw DataError("metrics: no videos to score");
    double sum = 0.0;
    for (std::size_t v = 0; v < gold.size(); ++v) sum += edit_distance(gold[v], pred[v]);
    return sum / static_cast<double>(gold.size());
}

MetricsReport evaluate_predictions(const std::vector<VideoRecord>& records, const std::vector<TagSequence>& preds) {
    if (records.size() != preds.size())
        throw DataError("metrics: " + std::to_string(records.size()) + " records vs " + std::to_string(preds.size()) +
                        " predictions");
    std::vector<TagSequence> golds;
    golds.reserve(records.size());
    for (const VideoRecord& r : records) golds.push_back(intervals_to_tags(r.flights, r.length()));

    MetricsReport rep;
    rep.frame_accuracy = frame_accuracy(golds, preds);
    rep.macro_f1 = macro_f1(golds, preds);
    rep.avg_edit_distance = avg_edit_distance(golds, preds);

    double err_sum = 0.0;
    for (std::size_t v = 0; v < records.size(); ++v) {
        const std::vector<FlightSpan> pred_spans = tags_to_intervals(preds[v]);
        const std::vector<SpanMatch> matches = match_spans(pred_spans, records[v].flights);

        MetricsReport::PerVideo pv;
        pv.video_id = records[v].video_id;
        pv.accuracy = frame_accuracy({golds[v]}, {preds[v]});
        pv.edit = edit_distance(golds[v], preds[v]);
        pv.gold_spans = records[v].flights.size();
        pv.predictions = pred_spans.size();
        for (const SpanMatch& m : matches) pv.matched += m.matched;
        pv.mean_error = mean_error_percentage(matches);
        rep.videos.push_back(std::move(pv));

        rep.predictions += pred_spans.size();
        rep.gold_spans += records[v].flights.size();
        for (const SpanMatch& m : matches) {
            if (!m.matched) continue;
            ++rep.overlapping;
            err_sum += 100.0 * std::abs(span_air_frames(m.pred) - span_air_frames(m.gold)) /
                       static_cast<double>(span_air_frames(m.gold));
        }
    }
    if (rep.overlapping > 0) rep.mean_error = err_sum / static_cast<double>(rep.overlapping);
    std::stable_sort(rep.videos.begin(), rep.videos.end(),
                     [](const MetricsReport::PerVideo& a, const MetricsReport::PerVideo& b) { return a.video_id < b.video_id; });
    return rep;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["frame_accuracy"] = report.frame_accuracy;
    j["macro_f1"] = report.macro_f1;
    j["mean_error_percent"] = report.mean_error ? nlohmann::json(*report.mean_error) : nlohmann::json(nullptr);
    j["overlapping"] = report.overlapping;
    j["predictions"] = report.predictions;
    j["gold_spans"] = report.gold_spans;
    j["avg_edit_distance"] = report.avg_edit_distance;
    nlohmann::json videos = nlohmann::json::array();
    for (const auto& v : report.videos) {
        nlohmann::json jv;
        jv["video_id"] = v.video_id;
        jv["accuracy"] = v.accuracy;
        jv["edit_distance"] = v.edit;
        jv["gold_spans"] = v.gold_spans;
        jv["predictions"] = v.predictions;
        jv["matched"] = v.matched;
        jv["mean_error_percent"] = v.mean_error ? nlohmann::json(*v.mean_error) : nlohmann::json(nullptr);
        videos.push_back(std::move(jv));
    }
    j["videos"] = std::move(videos);
    return j.dump(2);
}

std::string report_table(const MetricsReport& report) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    auto row = [&](const std::string& name, const std::string& value) {
        out << name;
        for (std::size_t i = name.size(); i < 24; ++i) out << ' ';
        out << value << '\n';
    };
    auto num = [](double v, int digits) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(digits);
        s << v;
        return s.str();
    };
    row("Accuracy (%)", num(report.frame_accuracy, 2));
    row("Macro F1", num(report.macro_f1, 3));
    row("Mean Error (%)", report.mean_error ? num(*report.mean_error, 2) + "  (N=" + std::to_string(report.overlapping) + ")"
                                            : "n/a  (N=0)");
    row("Avg Edit Distance", num(report.avg_edit_distance, 3));
    return out.str();
}

} // namespace airtime
