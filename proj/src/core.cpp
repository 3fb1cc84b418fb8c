#include "doraemon/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <limits>
#include <sstream>

namespace doraemon {

namespace {

constexpr double kUnitTolerance = 1e-9;

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseError("malformed number '" + std::string(s) + "'");
    }
    return v;
}

constexpr std::array<std::string_view, 24> kStopwords = {
    "a",    "an",  "and",  "at",       "find",    "for", "go",      "in",
    "is",   "it",  "near", "nearest",  "navigate", "of", "on",      "or",
    "see",  "the", "to",   "with",     "you",     "get", "nothing", "towards"};

}  // namespace

double wrap_angle(double a) {
    if (!std::isfinite(a)) {
        throw InvalidInput("angle must be finite");
    }
    double w = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
    if (w <= -kPi) {
        w += 2.0 * kPi;
    }
    return w;
}

Quaternion yaw_to_quaternion(double yaw) {
    return Quaternion{std::cos(yaw / 2.0), 0.0, 0.0, std::sin(yaw / 2.0)};
}

double quaternion_yaw(const Quaternion& q) {
    if (std::abs(q.norm() - 1.0) > kUnitTolerance) {
        throw InvalidInput("quaternion is not unit norm");
    }
    double yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
    return yaw <= -kPi ? kPi : yaw;
}

void Pose::validate() const {
    if (!std::isfinite(position.x) || !std::isfinite(position.y) || !std::isfinite(position.z)) {
        throw InvalidInput("pose position must be finite");
    }
    if (std::abs(orientation.norm() - 1.0) > kUnitTolerance) {
        throw InvalidInput("pose orientation is not a unit quaternion");
    }
}

PolarAction PolarAction::move(double r, double theta) {
    if (!std::isfinite(r) || r < 0.0) {
        throw InvalidInput("action distance must be finite and non-negative");
    }
    return PolarAction{Kind::Move, r, wrap_angle(theta)};
}

void PolarAction::validate(double r_max) const {
    if (is_stop()) {
        if (r != 0.0 || theta != 0.0) {
            throw InvalidInput("stop carries no parameters");
        }
        return;
    }
    if (!(r >= 0.0 && r <= r_max)) {
        throw InvalidInput("action distance outside [0, r_max]");
    }
    if (!(theta > -kPi && theta <= kPi)) {
        throw InvalidInput("action heading outside (-pi, pi]");
    }
}

std::string PolarAction::to_string() const {
    if (is_stop()) {
        return "stop";
    }
    return "move " + format_double(r) + " " + format_double(theta);
}

PolarAction PolarAction::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string word;
    in >> word;
    if (word == "stop") {
        if (in >> word) {
            throw ParseError("stop takes no arguments");
        }
        return stop();
    }
    if (word != "move") {
        throw ParseError("unknown action kind '" + word + "'");
    }
    std::string r, theta, extra;
    if (!(in >> r >> theta) || (in >> extra)) {
        throw ParseError("move expects exactly two numbers");
    }
    PolarAction a{Kind::Move, parse_double(r), parse_double(theta)};
    a.validate(std::numeric_limits<double>::infinity());
    return a;
}

Embedding::Embedding() : Embedding(reserved(kDefaultEmbeddingDim)) {}

Embedding Embedding::reserved(std::size_t dim) {
    if (dim == 0) {
        throw InvalidInput("embedding dimension must be positive");
    }
    std::vector<double> v(dim, 0.0);
    v[0] = 1.0;
    return Embedding(std::move(v));
}

Embedding Embedding::normalized(std::vector<double> values) {
    double sq = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidInput("embedding values must be finite");
        }
        sq += v * v;
    }
    double n = std::sqrt(sq);
    if (values.empty() || n < 1e-12) {
        throw InvalidInput("zero embedding is not allowed");
    }
    for (double& v : values) {
        v /= n;
    }
    return Embedding(std::move(values));
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw InvalidInput("embedding dimensions differ");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
    }
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

Embedding mean_embedding(std::span<const Embedding* const> items) {
    if (items.empty()) {
        throw EmptyInput("mean of zero embeddings");
    }
    std::vector<double> acc(items.front()->dim(), 0.0);
    for (const Embedding* e : items) {
        if (e->dim() != acc.size()) {
            throw InvalidInput("embedding dimensions differ");
        }
        auto v = e->values();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += v[i];
        }
    }
    double sq = 0.0;
    for (double v : acc) {
        sq += v * v;
    }
    if (std::sqrt(sq) < 1e-9) {
        return *items.front();
    }
    return Embedding::normalized(std::move(acc));
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::set<std::string> keyword_set(std::string_view text) {
    std::set<std::string> out;
    for (auto& t : tokenize(text)) {
        if (!is_stopword(t)) {
            out.insert(std::move(t));
        }
    }
    return out;
}

Embedding embed_text(std::string_view text, const EmbedderConfig& cfg) {
    auto tokens = tokenize(text);
    if (tokens.empty()) {
        return Embedding::reserved(cfg.dim);
    }
    std::vector<double> acc(cfg.dim, 0.0);
    for (const auto& tok : tokens) {
        std::uint64_t state = fnv1a(tok, cfg.seed);
        for (double& v : acc) {
            double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            v += 2.0 * u - 1.0;
        }
    }
    double sq = 0.0;
    for (double v : acc) {
        sq += v * v;
    }
    if (std::sqrt(sq) < 1e-12) {
        return Embedding::reserved(cfg.dim);
    }
    return Embedding::normalized(std::move(acc));
}

EmbeddingProvider hashed_embedder(EmbedderConfig cfg) {
    return [cfg](std::string_view text) { return embed_text(text, cfg); };
}

TaskSpec make_task(std::string_view text, const EmbeddingProvider& embed) {
    TaskSpec task;
    task.raw_text = std::string(text);
    task.keywords = keyword_set(text);
    if (task.keywords.empty()) {
        for (auto& t : tokenize(text)) {
            task.keywords.insert(std::move(t));
        }
    }
    if (task.keywords.empty()) {
        std::string lowered;
        for (char c : text) {
            if (!std::isspace(static_cast<unsigned char>(c))) {
                lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            }
        }
        if (!lowered.empty()) {
            task.keywords.insert(lowered);
        }
    }
    task.embedding = embed(text);
    return task;
}

TaskSpec make_task(std::string_view text, const EmbedderConfig& cfg) {
    return make_task(text, hashed_embedder(cfg));
}

}  // namespace doraemon
