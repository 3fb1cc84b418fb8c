#pragma once

// Shared vocabulary: planar/3D vectors, poses, polar actions, text embeddings
// and task descriptions.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "doraemon/errors.hpp"

namespace doraemon {

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Vec2 xy() const { return {x, y}; }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Unit quaternion (w, x, y, z).
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

Quaternion yaw_to_quaternion(double yaw);

// Rotation about the vertical axis, in (-pi, pi]. Throws InvalidInput when
// the quaternion is not unit within 1e-9.
double quaternion_yaw(const Quaternion& q);

struct Pose {
    Vec3 position;
    Quaternion orientation;

    static Pose planar(double x, double y, double yaw) {
        return Pose{{x, y, 0.0}, yaw_to_quaternion(yaw)};
    }

    double yaw() const { return quaternion_yaw(orientation); }
    void validate() const;
    friend bool operator==(const Pose&, const Pose&) = default;
};

// Agent action: move r meters after turning by theta, or stop.
struct PolarAction {
    enum class Kind { Move, Stop };

    Kind kind = Kind::Stop;
    double r = 0.0;
    double theta = 0.0;

    // theta is wrapped into (-pi, pi]; r must be finite and >= 0.
    static PolarAction move(double r, double theta);
    static PolarAction rotate(double theta) { return move(0.0, theta); }
    static PolarAction stop() { return PolarAction{}; }

    bool is_stop() const { return kind == Kind::Stop; }
    void validate(double r_max) const;

    // "stop" or "move <r> <theta>" with round-trip precision.
    std::string to_string() const;
    static PolarAction parse(std::string_view text);

    friend bool operator==(const PolarAction&, const PolarAction&) = default;
};

inline constexpr std::size_t kDefaultEmbeddingDim = 64;

// Unit-norm vector. A default-constructed embedding is the reserved basis
// vector e0 used for empty text.
class Embedding {
public:
    Embedding();
    static Embedding reserved(std::size_t dim);
    // Normalizes `values`; throws InvalidInput on zero or non-finite input.
    static Embedding normalized(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    std::size_t dim() const { return values_.size(); }

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

double cosine(const Embedding& a, const Embedding& b);

// Mean of the inputs, renormalized. Falls back to the first input when the
// mean vanishes; throws EmptyInput on an empty list.
Embedding mean_embedding(std::span<const Embedding* const> items);

struct EmbedderConfig {
    std::size_t dim = kDefaultEmbeddingDim;
    std::uint64_t seed = 0x5eed'd0e1'a3b0'0001ULL;
};

using EmbeddingProvider = std::function<Embedding(std::string_view)>;

// Seeded hashed bag-of-tokens projection. Each token contributes a
// pseudo-random dense vector in [-1, 1]^dim derived from its hash.
Embedding embed_text(std::string_view text, const EmbedderConfig& cfg = {});

EmbeddingProvider hashed_embedder(EmbedderConfig cfg = {});

// Lowercase ASCII alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);
bool is_stopword(std::string_view token);
// Tokens minus stopwords.
std::set<std::string> keyword_set(std::string_view text);

struct TaskSpec {
    std::string raw_text;
    std::set<std::string> keywords;
    Embedding embedding;
};

TaskSpec make_task(std::string_view text, const EmbeddingProvider& embed);
TaskSpec make_task(std::string_view text, const EmbedderConfig& cfg = {});

struct AttributeDatabase {
    std::string general_description;
    std::string appearance_features;
    std::string structure_shape;
    std::string common_location;
    std::set<std::string> location_keywords;
    bool degraded = false;
};

}  // namespace doraemon
