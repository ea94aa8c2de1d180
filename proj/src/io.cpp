#include "stepdp/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "stepdp/fusion.hpp"

namespace stepdp {

using nlohmann::json;

namespace {

constexpr std::string_view kScoresFormat = "stepdp-video-scores";
constexpr std::string_view kFeaturesFormat = "stepdp-features";
constexpr std::string_view kGroundTruthFormat = "stepdp-ground-truth";
constexpr std::string_view kPredictionsFormat = "stepdp-predictions";
constexpr char kBinaryMagic[4] = {'S', 'D', 'P', 'B'};

// Field access with errors that name the file and the path to the field.
class Reader {
public:
    explicit Reader(std::string_view source) : source_(source) {}

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw ParseError(source_ + ": field '" + field + "': " + what);
    }

    const json& get(const json& obj, const std::string& key, const std::string& path) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        const auto it = obj.find(key);
        if (it == obj.end()) {
            fail(join(path, key), "missing");
        }
        return *it;
    }

    std::string string(const json& obj, const std::string& key, const std::string& path) const {
        const json& v = get(obj, key, path);
        if (!v.is_string()) {
            fail(join(path, key), "expected a string");
        }
        return v.get<std::string>();
    }

    std::size_t index(const json& obj, const std::string& key, const std::string& path) const {
        const json& v = get(obj, key, path);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(join(path, key), "expected a non-negative integer");
        }
        return v.get<std::size_t>();
    }

    double number(const json& v, const std::string& path) const {
        if (!v.is_number()) {
            fail(path, "expected a number");
        }
        return v.get<double>();
    }

    bool boolean(const json& obj, const std::string& key, const std::string& path) const {
        const json& v = get(obj, key, path);
        if (!v.is_boolean()) {
            fail(join(path, key), "expected a boolean");
        }
        return v.get<bool>();
    }

    const json& array(const json& obj, const std::string& key, const std::string& path) const {
        const json& v = get(obj, key, path);
        if (!v.is_array()) {
            fail(join(path, key), "expected an array");
        }
        return v;
    }

    std::vector<double> numbers(const json& arr, const std::string& path) const {
        std::vector<double> out;
        out.reserve(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) {
            out.push_back(number(arr[i], path + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    void header(const json& doc, std::string_view format) const {
        if (string(doc, "format", "") != format) {
            fail("format", "expected '" + std::string(format) + "'");
        }
        const json& version = get(doc, "version", "");
        if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
            fail("version", "unsupported version (expected " + std::to_string(kFormatVersion) + ")");
        }
    }

    ScoreMap score_map(const json& arr, std::size_t n, const std::string& path) const {
        if (!arr.is_array() || arr.size() != n * n) {
            fail(path, "expected an array of " + std::to_string(n * n) + " cells");
        }
        std::vector<double> dense(n * n, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t e = 0; e < n; ++e) {
                const json& cell = arr[s * n + e];
                const std::string cell_path = path + "[" + std::to_string(s * n + e) + "]";
                if (s > e) {
                    if (!cell.is_null()) {
                        fail(cell_path, "cell with start > end must be null");
                    }
                    continue;
                }
                const double v = number(cell, cell_path);
                if (!std::isfinite(v)) {
                    fail(cell_path, "score must be finite");
                }
                dense[s * n + e] = v;
            }
        }
        return ScoreMap::from_dense(n, std::move(dense));
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    std::string source_;
};

json parse_json(std::string_view text, std::string_view source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
}

json encode_map(const ScoreMap& map) {
    const std::size_t n = map.num_clips();
    json arr = json::array();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = 0; e < n; ++e) {
            if (s > e) {
                arr.push_back(nullptr);
            } else {
                arr.push_back(map.at(s, e));
            }
        }
    }
    return arr;
}

// Little-endian binary helpers.
class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
        }
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out_ += s;
    }
    void raw(const char* p, std::size_t n) { out_.append(p, n); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class ByteReader {
public:
    ByteReader(std::string_view bytes, std::string_view source) : bytes_(bytes), source_(source) {}

    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    double f64(const char* field) {
        need(8, field);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }
    std::string str(const char* field) {
        const std::uint32_t len = u32(field);
        need(len, field);
        std::string s(bytes_.substr(pos_, len));
        pos_ += len;
        return s;
    }
    void skip(std::size_t n, const char* field) {
        need(n, field);
        pos_ += n;
    }
    bool done() const { return pos_ == bytes_.size(); }
    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw ParseError(source_ + ": field '" + field + "': " + what);
    }

private:
    void need(std::size_t n, const char* field) const {
        if (bytes_.size() - pos_ < n) {
            fail(field, "truncated file");
        }
    }

    std::string_view bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

void write_triangle(ByteWriter& w, const ScoreMap& map) {
    map.for_each_valid([&](std::size_t, std::size_t, double v) { w.f64(v); });
}

ScoreMap read_triangle(ByteReader& r, std::size_t n, const std::string& field) {
    std::vector<double> dense(n * n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = s; e < n; ++e) {
            const double v = r.f64(field.c_str());
            if (!std::isfinite(v)) {
                r.fail(field, "score must be finite");
            }
            dense[s * n + e] = v;
        }
    }
    return ScoreMap::from_dense(n, std::move(dense));
}

void check_video_scores(const VideoScoreFile& file, const std::function<void(const std::string&, const std::string&)>& fail) {
    if (file.num_clips == 0) {
        fail("num_clips", "must be >= 1");
    }
    if (file.queries.empty()) {
        fail("queries", "video has no queries");
    }
    for (std::size_t q = 0; q < file.queries.size(); ++q) {
        const auto& query = file.queries[q];
        const std::string path = "queries[" + std::to_string(q) + "]";
        if (!query.importance_logits.empty() && query.importance_logits.size() != query.phrase_scores.size() + 1) {
            fail(path + ".importance_logits", "expected " + std::to_string(query.phrase_scores.size() + 1) +
                                                  " logits (sentence first)");
        }
        if (query.importance_logits.empty() && !query.phrase_scores.empty()) {
            fail(path + ".importance_logits", "required when phrase_scores are present");
        }
    }
}

} // namespace

ScoreStack VideoScoreFile::fused_stack() const {
    ScoreStack stack;
    stack.video_id = video_id;
    stack.maps.reserve(queries.size());
    for (const auto& query : queries) {
        if (query.phrase_scores.empty()) {
            stack.maps.push_back(query.sentence_scores);
        } else {
            stack.maps.push_back(fuse_score_maps(query.sentence_scores, query.phrase_scores,
                                                 softmax_importance(query.importance_logits)));
        }
    }
    return stack;
}

std::vector<std::string> VideoScoreFile::query_ids() const {
    std::vector<std::string> ids;
    ids.reserve(queries.size());
    for (const auto& query : queries) {
        ids.push_back(query.query_id);
    }
    return ids;
}

std::string encode_video_scores_json(const VideoScoreFile& file) {
    json doc;
    doc["format"] = kScoresFormat;
    doc["version"] = kFormatVersion;
    doc["video_id"] = file.video_id;
    doc["num_clips"] = file.num_clips;
    json queries = json::array();
    for (const auto& query : file.queries) {
        json q;
        q["query_id"] = query.query_id;
        q["sentence_scores"] = encode_map(query.sentence_scores);
        json phrases = json::array();
        for (const auto& map : query.phrase_scores) {
            phrases.push_back(encode_map(map));
        }
        q["phrase_scores"] = std::move(phrases);
        q["importance_logits"] = query.importance_logits;
        queries.push_back(std::move(q));
    }
    doc["queries"] = std::move(queries);
    return doc.dump() + "\n";
}

std::string encode_video_scores_binary(const VideoScoreFile& file) {
    ByteWriter w;
    w.raw(kBinaryMagic, sizeof(kBinaryMagic));
    w.u32(kFormatVersion);
    w.str(file.video_id);
    w.u32(static_cast<std::uint32_t>(file.num_clips));
    w.u32(static_cast<std::uint32_t>(file.queries.size()));
    for (const auto& query : file.queries) {
        w.str(query.query_id);
        w.u32(static_cast<std::uint32_t>(query.phrase_scores.size()));
        w.u32(static_cast<std::uint32_t>(query.importance_logits.size()));
        for (double logit : query.importance_logits) {
            w.f64(logit);
        }
        write_triangle(w, query.sentence_scores);
        for (const auto& map : query.phrase_scores) {
            write_triangle(w, map);
        }
    }
    return w.take();
}

VideoScoreFile decode_video_scores(std::string_view bytes, std::string_view source) {
    VideoScoreFile file;
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic, 4) == 0) {
        ByteReader r(bytes, source);
        r.skip(4, "magic");
        if (r.u32("version") != kFormatVersion) {
            r.fail("version", "unsupported version (expected " + std::to_string(kFormatVersion) + ")");
        }
        file.video_id = r.str("video_id");
        file.num_clips = r.u32("num_clips");
        const std::uint32_t num_queries = r.u32("queries");
        for (std::uint32_t q = 0; q < num_queries; ++q) {
            const std::string path = "queries[" + std::to_string(q) + "]";
            QueryScores query;
            query.query_id = r.str((path + ".query_id").c_str());
            const std::uint32_t num_phrases = r.u32((path + ".phrase_scores").c_str());
            const std::uint32_t num_logits = r.u32((path + ".importance_logits").c_str());
            for (std::uint32_t i = 0; i < num_logits; ++i) {
                query.importance_logits.push_back(r.f64((path + ".importance_logits").c_str()));
            }
            query.sentence_scores = read_triangle(r, file.num_clips, path + ".sentence_scores");
            for (std::uint32_t p = 0; p < num_phrases; ++p) {
                query.phrase_scores.push_back(
                    read_triangle(r, file.num_clips, path + ".phrase_scores[" + std::to_string(p) + "]"));
            }
            file.queries.push_back(std::move(query));
        }
        if (!r.done()) {
            r.fail("queries", "trailing bytes after last query");
        }
        check_video_scores(file, [&](const std::string& f, const std::string& w) { r.fail(f, w); });
        return file;
    }

    const Reader rd(source);
    const json doc = parse_json(bytes, source);
    rd.header(doc, kScoresFormat);
    file.video_id = rd.string(doc, "video_id", "");
    file.num_clips = rd.index(doc, "num_clips", "");
    const json& queries = rd.array(doc, "queries", "");
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const std::string path = "queries[" + std::to_string(q) + "]";
        const json& jq = queries[q];
        QueryScores query;
        query.query_id = rd.string(jq, "query_id", path);
        query.sentence_scores = rd.score_map(rd.get(jq, "sentence_scores", path), file.num_clips,
                                             path + ".sentence_scores");
        if (jq.contains("phrase_scores")) {
            const json& phrases = rd.array(jq, "phrase_scores", path);
            for (std::size_t p = 0; p < phrases.size(); ++p) {
                query.phrase_scores.push_back(rd.score_map(phrases[p], file.num_clips,
                                                           path + ".phrase_scores[" + std::to_string(p) + "]"));
            }
        }
        if (jq.contains("importance_logits")) {
            query.importance_logits = rd.numbers(rd.array(jq, "importance_logits", path), path + ".importance_logits");
        }
        file.queries.push_back(std::move(query));
    }
    check_video_scores(file, [&](const std::string& f, const std::string& w) { rd.fail(f, w); });
    return file;
}

std::string encode_features(const VideoFeatures& video) {
    const auto& fm = video.features;
    const std::size_t n = fm.num_clips();
    json doc;
    doc["format"] = kFeaturesFormat;
    doc["version"] = kFormatVersion;
    doc["video_id"] = video.video_id;
    doc["num_clips"] = n;
    doc["dim"] = fm.dim();
    json cells = json::array();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = 0; e < n; ++e) {
            if (s > e) {
                cells.push_back(nullptr);
            } else {
                const auto cell = fm.cell(s, e);
                cells.push_back(std::vector<double>(cell.begin(), cell.end()));
            }
        }
    }
    doc["cells"] = std::move(cells);
    json queries = json::array();
    for (const auto& q : video.queries) {
        queries.push_back({{"query_id", q.query_id},
                           {"sentence", q.sentence},
                           {"phrases", q.phrases},
                           {"importance_logits", q.importance_logits}});
    }
    doc["queries"] = std::move(queries);
    return doc.dump() + "\n";
}

VideoFeatures decode_features(std::string_view text, std::string_view source) {
    const Reader rd(source);
    const json doc = parse_json(text, source);
    rd.header(doc, kFeaturesFormat);
    const std::string video_id = rd.string(doc, "video_id", "");
    const std::size_t n = rd.index(doc, "num_clips", "");
    const std::size_t dim = rd.index(doc, "dim", "");
    if (n == 0 || dim == 0) {
        rd.fail("num_clips", "num_clips and dim must be >= 1");
    }
    const json& cells = rd.array(doc, "cells", "");
    if (cells.size() != n * n) {
        rd.fail("cells", "expected " + std::to_string(n * n) + " cells");
    }
    std::vector<double> values(n * n * dim, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t e = 0; e < n; ++e) {
            const json& cell = cells[s * n + e];
            const std::string path = "cells[" + std::to_string(s * n + e) + "]";
            if (s > e) {
                if (!cell.is_null()) {
                    rd.fail(path, "cell with start > end must be null");
                }
                continue;
            }
            if (!cell.is_array() || cell.size() != dim) {
                rd.fail(path, "expected " + std::to_string(dim) + " numbers");
            }
            const auto v = rd.numbers(cell, path);
            std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>((s * n + e) * dim));
        }
    }
    std::vector<QueryFeatures> queries;
    const json& jqs = rd.array(doc, "queries", "");
    for (std::size_t q = 0; q < jqs.size(); ++q) {
        const std::string path = "queries[" + std::to_string(q) + "]";
        QueryFeatures query;
        query.query_id = rd.string(jqs[q], "query_id", path);
        query.sentence = rd.numbers(rd.array(jqs[q], "sentence", path), path + ".sentence");
        const json& phrases = rd.array(jqs[q], "phrases", path);
        for (std::size_t p = 0; p < phrases.size(); ++p) {
            const std::string ppath = path + ".phrases[" + std::to_string(p) + "]";
            if (!phrases[p].is_array()) {
                rd.fail(ppath, "expected an array");
            }
            query.phrases.push_back(rd.numbers(phrases[p], ppath));
        }
        query.importance_logits = rd.numbers(rd.array(jqs[q], "importance_logits", path), path + ".importance_logits");
        if (query.importance_logits.size() != query.phrases.size() + 1) {
            rd.fail(path + ".importance_logits", "expected one logit per phrase plus the sentence logit");
        }
        queries.push_back(std::move(query));
    }
    try {
        return VideoFeatures{video_id, TemporalFeatureMap(n, dim, std::move(values)), std::move(queries)};
    } catch (const InvalidArgument& e) {
        rd.fail("cells", e.what());
    }
}

std::string encode_ground_truth(const std::vector<VideoGroundTruth>& videos) {
    json doc;
    doc["format"] = kGroundTruthFormat;
    doc["version"] = kFormatVersion;
    json jv = json::array();
    for (const auto& video : videos) {
        json queries = json::array();
        for (const auto& q : video.queries) {
            queries.push_back({{"query_id", q.query_id}, {"start", q.interval.start}, {"end", q.interval.end}});
        }
        jv.push_back({{"video_id", video.video_id}, {"queries", std::move(queries)}});
    }
    doc["videos"] = std::move(jv);
    return doc.dump(1) + "\n";
}

std::vector<VideoGroundTruth> decode_ground_truth(std::string_view text, std::string_view source) {
    const Reader rd(source);
    const json doc = parse_json(text, source);
    rd.header(doc, kGroundTruthFormat);
    std::vector<VideoGroundTruth> out;
    const json& videos = rd.array(doc, "videos", "");
    for (std::size_t v = 0; v < videos.size(); ++v) {
        const std::string path = "videos[" + std::to_string(v) + "]";
        VideoGroundTruth video;
        video.video_id = rd.string(videos[v], "video_id", path);
        const json& queries = rd.array(videos[v], "queries", path);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const std::string qpath = path + ".queries[" + std::to_string(q) + "]";
            LabeledInterval li;
            li.query_id = rd.string(queries[q], "query_id", qpath);
            li.interval = {rd.index(queries[q], "start", qpath), rd.index(queries[q], "end", qpath)};
            if (!li.interval.valid()) {
                rd.fail(qpath, "start must not exceed end");
            }
            video.queries.push_back(std::move(li));
        }
        out.push_back(std::move(video));
    }
    return out;
}

std::string encode_predictions(const std::vector<VideoPrediction>& videos) {
    json doc;
    doc["format"] = kPredictionsFormat;
    doc["version"] = kFormatVersion;
    json jv = json::array();
    for (const auto& video : videos) {
        const auto& a = video.assignment;
        json queries = json::array();
        for (const auto& entry : a.entries) {
            queries.push_back({{"query_id", video.query_ids.at(entry.query)},
                               {"start", entry.interval.start},
                               {"end", entry.interval.end},
                               {"log_prob", entry.log_prob}});
        }
        jv.push_back({{"video_id", a.video_id},
                      {"method", std::string(to_string(a.method))},
                      {"fallback_used", a.fallback_used},
                      {"objective", a.objective},
                      {"queries", std::move(queries)}});
    }
    doc["videos"] = std::move(jv);
    return doc.dump(1) + "\n";
}

std::vector<VideoPrediction> decode_predictions(std::string_view text, std::string_view source) {
    const Reader rd(source);
    const json doc = parse_json(text, source);
    rd.header(doc, kPredictionsFormat);
    std::vector<VideoPrediction> out;
    const json& videos = rd.array(doc, "videos", "");
    for (std::size_t v = 0; v < videos.size(); ++v) {
        const std::string path = "videos[" + std::to_string(v) + "]";
        const json& jv = videos[v];
        VideoPrediction pred;
        auto& a = pred.assignment;
        a.video_id = rd.string(jv, "video_id", path);
        try {
            a.method = parse_select_method(rd.string(jv, "method", path));
        } catch (const InvalidArgument& e) {
            rd.fail(path + ".method", e.what());
        }
        a.fallback_used = rd.boolean(jv, "fallback_used", path);
        a.objective = rd.number(rd.get(jv, "objective", path), path + ".objective");
        const json& queries = rd.array(jv, "queries", path);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const std::string qpath = path + ".queries[" + std::to_string(q) + "]";
            AssignmentEntry entry;
            entry.query = q;
            entry.interval = {rd.index(queries[q], "start", qpath), rd.index(queries[q], "end", qpath)};
            if (!entry.interval.valid()) {
                rd.fail(qpath, "start must not exceed end");
            }
            entry.log_prob = rd.number(rd.get(queries[q], "log_prob", qpath), qpath + ".log_prob");
            pred.query_ids.push_back(rd.string(queries[q], "query_id", qpath));
            a.entries.push_back(entry);
        }
        out.push_back(std::move(pred));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError(path.string() + ": cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(path.string() + ": cannot open for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(path.string() + ": write failed");
    }
}

VideoScoreFile read_video_scores(const std::filesystem::path& path) {
    return decode_video_scores(read_file(path), path.string());
}

void write_video_scores(const std::filesystem::path& path, const VideoScoreFile& file, ScoreFileFormat format) {
    write_file(path, format == ScoreFileFormat::json ? encode_video_scores_json(file)
                                                     : encode_video_scores_binary(file));
}

std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs) {
    std::vector<std::filesystem::path> out;
    for (const auto& input : inputs) {
        if (std::filesystem::is_directory(input)) {
            std::vector<std::filesystem::path> found;
            for (const auto& entry : std::filesystem::directory_iterator(input)) {
                const auto ext = entry.path().extension();
                if (entry.is_regular_file() && (ext == ".json" || ext == ".sdpb")) {
                    found.push_back(entry.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(input);
        }
    }
    return out;
}

} // namespace stepdp
