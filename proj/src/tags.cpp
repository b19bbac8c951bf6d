#include "airtime/tags.hpp"

#include "airtime/error.hpp"

namespace airtime {

void validate_spans(const std::vector<FlightSpan>& flights, std::size_t length) {
    int prev_end = -2;
    for (std::size_t k = 0; k < flights.size(); ++k) {
        const FlightSpan& f = flights[k];
        const std::string where = "flight " + std::to_string(k) + " (" + std::to_string(f.start) + "," + std::to_string(f.end) + ")";
        if (f.start < 0 || static_cast<std::size_t>(f.end) >= length)
            throw SpanError(where + ": outside sequence of length " + std::to_string(length));
        if (f.end < f.start + 2)
            throw SpanError(where + ": a flight needs at least one in-air frame between take-off and landing");
        if (f.start <= prev_end + 1)
            throw SpanError(where + ": flights must be separated by at least one non-flight frame");
        prev_end = f.end;
    }
}

TagSequence intervals_to_tags(const std::vector<FlightSpan>& flights, std::size_t length) {
    validate_spans(flights, length);
    TagSequence tags(length, Tag::O);
    for (const FlightSpan& f : flights) {
        tags[static_cast<std::size_t>(f.start)] = Tag::B;
        for (int i = f.start + 1; i < f.end; ++i) tags[static_cast<std::size_t>(i)] = Tag::I;
        tags[static_cast<std::size_t>(f.end)] = Tag::E;
    }
    return tags;
}

std::vector<FlightSpan> tags_to_intervals(const TagSequence& tags) {
    std::vector<FlightSpan> spans;
    std::size_t i = 0;
    while (i < tags.size()) {
        if (tags[i] == Tag::O) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < tags.size() && tags[j + 1] != Tag::O) ++j;
        spans.push_back({static_cast<int>(i), static_cast<int>(j)});
        i = j + 1;
    }
    return spans;
}

bool tags_grammar_valid(const TagSequence& tags) {
    if (tags.empty()) return true;
    static constexpr bool allowed[4][4] = {
        // to:   O      B      I      E
        {true, true, false, false}, // from O
        {false, false, true, false}, // from B
        {false, false, true, true},  // from I
        {true, false, false, false}, // from E
    };
    if (tags.front() != Tag::O && tags.front() != Tag::B) return false;
    if (tags.back() != Tag::O && tags.back() != Tag::E) return false;
    for (std::size_t i = 0; i + 1 < tags.size(); ++i)
        if (!allowed[static_cast<int>(tags[i])][static_cast<int>(tags[i + 1])]) return false;
    return true;
}

std::vector<double> air_time(const TagSequence& tags, double fps) {
    if (fps <= 0.0) throw ConfigError("air_time: fps must be positive, got " + std::to_string(fps));
    std::vector<double> seconds;
    for (const FlightSpan& span : tags_to_intervals(tags)) {
        int in_air = 0;
        for (int i = span.start; i <= span.end; ++i)
            if (tags[static_cast<std::size_t>(i)] == Tag::I) ++in_air;
        seconds.push_back(static_cast<double>(in_air) / fps);
    }
    return seconds;
}

std::string tags_to_string(const TagSequence& tags) {
    std::string s;
    s.reserve(tags.size());
    for (Tag t : tags) s.push_back(tag_char(t));
    return s;
}

} // namespace airtime
