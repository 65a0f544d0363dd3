#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "steploc/lexicon.hpp"
#include "steploc/transitions.hpp"
#include "steploc/types.hpp"

namespace steploc {

/// Fixed float formatting used by every writer: 9 significant digits,
/// round-half-even via the C runtime. Negative zero normalizes to "0".
inline std::string format_number(double value) {
    if (value == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

/// Snap a value to what it will read back as after one write/load cycle.
inline double quantize_number(double value) {
    return std::strtod(format_number(value).c_str(), nullptr);
}

namespace jsonio {

using nlohmann::json;

inline std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

inline json parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key))
        throw ValidationError(path + ": missing field \"" + key + "\"");
    return obj.at(key);
}

inline double as_number(const json& j, const char* key, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path + ": field \"" + key + "\" must be a number");
    return j.get<double>();
}

inline int as_int(const json& j, const char* key, const std::string& path) {
    if (!j.is_number_integer()) throw ValidationError(path + ": field \"" + key + "\" must be an integer");
    return j.get<int>();
}

inline std::string as_string(const json& j, const char* key, const std::string& path) {
    if (!j.is_string()) throw ValidationError(path + ": field \"" + key + "\" must be a string");
    return j.get<std::string>();
}

inline const json& as_array(const json& j, const char* key, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + ": field \"" + key + "\" must be an array");
    return j;
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError(path + ": cannot open file for writing");
    out << text;
    if (!out) throw ValidationError(path + ": write failed");
}

} // namespace jsonio

inline Lexicon load_lexicon(const std::string& path) {
    using jsonio::as_array, jsonio::as_int, jsonio::as_string, jsonio::field;
    const auto j = jsonio::parse_file(path);
    Lexicon lex;
    for (const auto& d : as_array(field(j, "domains", path), "domains", path)) {
        lex.domains.push_back({as_int(field(d, "id", path), "id", path),
                               as_string(field(d, "name", path), "name", path)});
    }
    for (const auto& t : as_array(field(j, "tasks", path), "tasks", path)) {
        lex.tasks.push_back({as_int(field(t, "id", path), "id", path),
                             as_string(field(t, "name", path), "name", path),
                             as_int(field(t, "domain", path), "domain", path)});
    }
    for (const auto& s : as_array(field(j, "steps", path), "steps", path)) {
        lex.steps.push_back({as_int(field(s, "id", path), "id", path),
                             as_string(field(s, "label", path), "label", path),
                             as_int(field(s, "task", path), "task", path)});
    }
    try {
        validate_lexicon(lex);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return lex;
}

inline std::vector<ProposalSet> load_proposals(const std::string& path, int expected_k = -1) {
    using jsonio::as_array, jsonio::as_number, jsonio::as_string, jsonio::field;
    const auto j = jsonio::parse_file(path);
    std::vector<ProposalSet> out;
    for (const auto& v : as_array(field(j, "videos", path), "videos", path)) {
        ProposalSet set;
        set.video_id = as_string(field(v, "video_id", path), "video_id", path);
        set.duration_s = as_number(field(v, "duration_s", path), "duration_s", path);
        for (const auto& p : as_array(field(v, "proposals", path), "proposals", path)) {
            Proposal prop;
            prop.start_s = as_number(field(p, "start_s", path), "start_s", path);
            prop.end_s = as_number(field(p, "end_s", path), "end_s", path);
            for (const auto& s : as_array(field(p, "scores", path), "scores", path))
                prop.scores.push_back(as_number(s, "scores", path));
            set.proposals.push_back(std::move(prop));
        }
        try {
            validate_proposal_set(set, expected_k);
        } catch (const ValidationError& e) {
            throw ValidationError(path + ": " + e.what());
        }
        out.push_back(std::move(set));
    }
    return out;
}

inline AnnotationSet load_annotations(const std::string& path, const Lexicon* lex = nullptr) {
    using jsonio::as_array, jsonio::as_int, jsonio::as_number, jsonio::as_string, jsonio::field;
    const auto j = jsonio::parse_file(path);
    AnnotationSet out;
    for (const auto& v : as_array(field(j, "videos", path), "videos", path)) {
        VideoAnnotation video;
        video.video_id = as_string(field(v, "video_id", path), "video_id", path);
        video.task_id = as_int(field(v, "task", path), "task", path);
        video.duration_s = as_number(field(v, "duration_s", path), "duration_s", path);
        for (const auto& s : as_array(field(v, "segments", path), "segments", path)) {
            video.segments.push_back({as_int(field(s, "step", path), "step", path),
                                      as_number(field(s, "start_s", path), "start_s", path),
                                      as_number(field(s, "end_s", path), "end_s", path)});
        }
        out.videos.push_back(std::move(video));
    }
    try {
        validate_annotations(out, lex);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return out;
}

inline DetectionSet load_detections(const std::string& path, const Lexicon* lex = nullptr) {
    using jsonio::as_array, jsonio::as_int, jsonio::as_number, jsonio::as_string, jsonio::field;
    const auto j = jsonio::parse_file(path);
    DetectionSet out;
    for (const auto& v : as_array(field(j, "videos", path), "videos", path)) {
        VideoDetections video;
        video.video_id = as_string(field(v, "video_id", path), "video_id", path);
        for (const auto& d : as_array(field(v, "detections", path), "detections", path)) {
            video.detections.push_back({as_int(field(d, "step", path), "step", path),
                                        as_number(field(d, "start_s", path), "start_s", path),
                                        as_number(field(d, "end_s", path), "end_s", path),
                                        as_number(field(d, "score", path), "score", path)});
        }
        out.videos.push_back(std::move(video));
    }
    try {
        validate_detections(out, lex);
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return out;
}

inline TransitionModel load_transitions(const std::string& path) {
    using jsonio::as_array, jsonio::as_int, jsonio::as_number, jsonio::field;
    const auto j = jsonio::parse_file(path);
    TransitionModel model;
    model.num_steps = as_int(field(j, "K", path), "K", path);
    if (model.num_steps <= 0) throw ValidationError(path + ": K must be > 0");
    auto read_matrix = [&](const char* key, std::vector<double>& dst) {
        const auto& rows = as_array(field(j, key, path), key, path);
        if (static_cast<int>(rows.size()) != model.num_steps)
            throw ValidationError(path + ": \"" + key + "\" must have K rows");
        for (const auto& row : rows) {
            if (!row.is_array() || static_cast<int>(row.size()) != model.num_steps)
                throw ValidationError(path + ": \"" + key + "\" rows must have K entries");
            for (const auto& x : row) dst.push_back(as_number(x, key, path));
        }
    };
    read_matrix("omega", model.counts);
    read_matrix("upsilon", model.probs);
    const auto& eta = as_array(field(j, "eta", path), "eta", path);
    if (static_cast<int>(eta.size()) != model.num_steps)
        throw ValidationError(path + ": \"eta\" must have K entries");
    for (const auto& x : eta) model.first_step_prior.push_back(jsonio::as_number(x, "eta", path));
    return model;
}

// Writers emit objects with alphabetically sorted keys and format_number
// floats so identical data always produces identical bytes.

inline void write_lexicon(const std::string& path, const Lexicon& lex) {
    std::ostringstream out;
    out << "{\"domains\":[";
    for (std::size_t i = 0; i < lex.domains.size(); ++i) {
        if (i) out << ',';
        out << "{\"id\":" << lex.domains[i].id << ",\"name\":\"" << jsonio::escape(lex.domains[i].name) << "\"}";
    }
    out << "],\"steps\":[";
    for (std::size_t i = 0; i < lex.steps.size(); ++i) {
        if (i) out << ',';
        out << "{\"id\":" << lex.steps[i].id << ",\"label\":\"" << jsonio::escape(lex.steps[i].label)
            << "\",\"task\":" << lex.steps[i].task_id << '}';
    }
    out << "],\"tasks\":[";
    for (std::size_t i = 0; i < lex.tasks.size(); ++i) {
        if (i) out << ',';
        out << "{\"domain\":" << lex.tasks[i].domain_id << ",\"id\":" << lex.tasks[i].id << ",\"name\":\""
            << jsonio::escape(lex.tasks[i].name) << "\"}";
    }
    out << "]}\n";
    jsonio::write_file(path, out.str());
}

inline void write_proposals(const std::string& path, const std::vector<ProposalSet>& videos) {
    std::ostringstream out;
    out << "{\"videos\":[";
    for (std::size_t v = 0; v < videos.size(); ++v) {
        if (v) out << ',';
        out << "{\"duration_s\":" << format_number(videos[v].duration_s) << ",\"proposals\":[";
        for (std::size_t n = 0; n < videos[v].proposals.size(); ++n) {
            const auto& p = videos[v].proposals[n];
            if (n) out << ',';
            out << "{\"end_s\":" << format_number(p.end_s) << ",\"scores\":[";
            for (std::size_t k = 0; k < p.scores.size(); ++k) {
                if (k) out << ',';
                out << format_number(p.scores[k]);
            }
            out << "],\"start_s\":" << format_number(p.start_s) << '}';
        }
        out << "],\"video_id\":\"" << jsonio::escape(videos[v].video_id) << "\"}";
    }
    out << "]}\n";
    jsonio::write_file(path, out.str());
}

inline void write_annotations(const std::string& path, const AnnotationSet& set) {
    std::ostringstream out;
    out << "{\"videos\":[";
    for (std::size_t v = 0; v < set.videos.size(); ++v) {
        const auto& video = set.videos[v];
        if (v) out << ',';
        out << "{\"duration_s\":" << format_number(video.duration_s) << ",\"segments\":[";
        for (std::size_t i = 0; i < video.segments.size(); ++i) {
            const auto& s = video.segments[i];
            if (i) out << ',';
            out << "{\"end_s\":" << format_number(s.end_s) << ",\"start_s\":" << format_number(s.start_s)
                << ",\"step\":" << s.step_id << '}';
        }
        out << "],\"task\":" << video.task_id << ",\"video_id\":\"" << jsonio::escape(video.video_id) << "\"}";
    }
    out << "]}\n";
    jsonio::write_file(path, out.str());
}

inline void write_detections(const std::string& path, const DetectionSet& set) {
    std::ostringstream out;
    out << "{\"videos\":[";
    for (std::size_t v = 0; v < set.videos.size(); ++v) {
        const auto& video = set.videos[v];
        if (v) out << ',';
        out << "{\"detections\":[";
        for (std::size_t i = 0; i < video.detections.size(); ++i) {
            const auto& d = video.detections[i];
            if (i) out << ',';
            out << "{\"end_s\":" << format_number(d.end_s) << ",\"score\":" << format_number(d.score)
                << ",\"start_s\":" << format_number(d.start_s) << ",\"step\":" << d.step_id << '}';
        }
        out << "],\"video_id\":\"" << jsonio::escape(video.video_id) << "\"}";
    }
    out << "]}\n";
    jsonio::write_file(path, out.str());
}

inline void write_transitions(const std::string& path, const TransitionModel& model) {
    auto matrix = [&](const std::vector<double>& values) {
        std::ostringstream out;
        out << '[';
        for (int i = 0; i < model.num_steps; ++i) {
            if (i) out << ',';
            out << '[';
            for (int j = 0; j < model.num_steps; ++j) {
                if (j) out << ',';
                out << format_number(values[static_cast<std::size_t>(i) * model.num_steps + j]);
            }
            out << ']';
        }
        out << ']';
        return out.str();
    };
    std::ostringstream out;
    out << "{\"K\":" << model.num_steps << ",\"eta\":[";
    for (int i = 0; i < model.num_steps; ++i) {
        if (i) out << ',';
        out << format_number(model.first_step_prior[i]);
    }
    out << "],\"omega\":" << matrix(model.counts) << ",\"upsilon\":" << matrix(model.probs) << "}\n";
    jsonio::write_file(path, out.str());
}

} // namespace steploc
