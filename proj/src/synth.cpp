#include "otflow/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace otflow {

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 v;
    do {
        v = Vec3(g(rng), g(rng), g(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

double quantize8(double c) { return std::round(std::clamp(c, 0.0, 1.0) * 255.0) / 255.0; }

Vec3 quantize8(const Vec3& c) { return Vec3(quantize8(c.x()), quantize8(c.y()), quantize8(c.z())); }

struct LocalSample {
    Vec3 local;
    Vec3 normal;
};

LocalSample sample_shape(BodyShape shape, double s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-s, s);
    switch (shape) {
        case BodyShape::plane: return {Vec3(u(rng), u(rng), 0.0), Vec3::UnitZ()};
        case BodyShape::box: {
            std::uniform_int_distribution<int> face(0, 5);
            const int f = face(rng);
            const int axis = f / 2;
            const double sign = (f % 2 == 0) ? 1.0 : -1.0;
            const double a = u(rng);
            const double b = u(rng);
            Vec3 p = Vec3::Zero();
            Vec3 n = Vec3::Zero();
            n(axis) = sign;
            p(axis) = sign * s;
            p((axis + 1) % 3) = a;
            p((axis + 2) % 3) = b;
            return {p, n};
        }
        case BodyShape::sphere: {
            const Vec3 d = random_unit(rng);
            return {s * d, d};
        }
    }
    throw std::logic_error("sample_shape: unknown shape");
}

void validate(const SceneSpec& spec) {
    if (spec.body_count == 0) throw std::invalid_argument("generate: degenerate spec, zero bodies");
    if (spec.points_per_body == 0)
        throw std::invalid_argument("generate: points_per_body must be positive");
    if (spec.body_count * spec.points_per_body < 2)
        throw std::invalid_argument("generate: scene needs at least 2 points");
    if (spec.max_rotation < 0.0 || spec.max_rotation > 0.3)
        throw std::invalid_argument("generate: max_rotation must lie in [0, 0.3] rad");
    if (spec.max_translation < 0.0 || spec.max_translation > 3.0)
        throw std::invalid_argument("generate: max_translation must lie in [0, 3] m");
    if (!spec.motions.empty() && spec.motions.size() != spec.body_count)
        throw std::invalid_argument("generate: motion list length must equal body_count");
    for (const BodyMotion& m : spec.motions) {
        if (std::abs(m.angle) > 0.3)
            throw std::invalid_argument("generate: body rotation exceeds 0.3 rad");
        if (m.translation.norm() > 3.0)
            throw std::invalid_argument("generate: body translation exceeds 3 m");
        if (m.angle != 0.0 && m.axis.norm() < 1e-12)
            throw std::invalid_argument("generate: rotation axis is degenerate");
    }
    if (spec.jitter_sigma < 0.0) throw std::invalid_argument("generate: jitter_sigma must be >= 0");
    if (spec.outlier_fraction < 0.0 || spec.outlier_fraction >= 1.0)
        throw std::invalid_argument("generate: outlier_fraction must lie in [0, 1)");
    if (spec.min_gap < 0.0) throw std::invalid_argument("generate: min_gap must be >= 0");
    if (spec.body_scale <= 0.0) throw std::invalid_argument("generate: body_scale must be positive");
    if (spec.min_point_spacing < 0.0)
        throw std::invalid_argument("generate: min_point_spacing must be >= 0");
}

}  // namespace

SynthScene generate(const SceneSpec& spec) {
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t n_core = spec.body_count * spec.points_per_body;
    // Body circumradius is sqrt(3)*scale (box corners); stride keeps surfaces
    // at least min_gap apart in frame 1.
    const double stride = 2.0 * std::sqrt(3.0) * spec.body_scale + spec.min_gap;
    static constexpr BodyShape kShapeCycle[] = {BodyShape::plane, BodyShape::box,
                                                BodyShape::sphere};

    SynthScene scene;
    scene.p.positions.reserve(n_core);
    scene.p.colors.reserve(n_core);
    scene.p.normals.reserve(n_core);
    scene.p.normal_valid.reserve(n_core);
    scene.q = scene.p;
    scene.body_id.reserve(n_core);
    std::vector<Vec3> q_rigid;
    q_rigid.reserve(n_core);

    for (std::size_t b = 0; b < spec.body_count; ++b) {
        const BodyShape shape =
            spec.shapes.empty() ? kShapeCycle[b % 3] : spec.shapes[b % spec.shapes.size()];
        const Vec3 center(static_cast<double>(b) * stride, 0.0, 0.0);

        BodyMotion motion;
        if (spec.motions.empty()) {
            motion.angle = unit(rng) * spec.max_rotation;
            motion.axis = random_unit(rng);
            motion.translation = (unit(rng) * spec.max_translation) * random_unit(rng);
        } else {
            motion = spec.motions[b];
        }
        const Eigen::Matrix3d rot =
            motion.angle == 0.0
                ? Eigen::Matrix3d::Identity()
                : Eigen::AngleAxisd(motion.angle, motion.axis.normalized()).toRotationMatrix();

        Vec3 body_color(unit(rng), unit(rng), unit(rng));
        body_color = quantize8(body_color);

        std::vector<LocalSample> samples(spec.points_per_body);
        Vec3 centroid = Vec3::Zero();
        for (std::size_t k = 0; k < samples.size(); ++k) {
            LocalSample cand;
            for (int tries = 0;; ++tries) {
                cand = sample_shape(shape, spec.body_scale, rng);
                bool separated = true;
                for (std::size_t m = 0; m < k && separated; ++m)
                    separated = spec.min_point_spacing <= 0.0 ||
                                (samples[m].local - cand.local).norm() >= spec.min_point_spacing;
                if (separated) break;
                if (tries > 400)
                    throw std::runtime_error(
                        "generate: cannot place points at the requested spacing; reduce "
                        "points_per_body or min_point_spacing");
            }
            samples[k] = cand;
            centroid += center + cand.local;
        }
        centroid /= static_cast<double>(spec.points_per_body);

        for (const LocalSample& s : samples) {
            const Vec3 pw = center + s.local;
            // Displacement form keeps zero motion bitwise exact: rot*arm - arm
            // vanishes identically when rot is the identity.
            const Vec3 arm = pw - centroid;
            const Vec3 qw = pw + ((rot * arm - arm) + motion.translation);
            const Vec3 color = spec.color_mode == ColorMode::per_body
                                   ? body_color
                                   : quantize8(Vec3::Constant(0.5) +
                                               s.local / (2.0 * spec.body_scale));
            scene.p.positions.push_back(pw);
            scene.p.colors.push_back(color);
            scene.p.normals.push_back(s.normal);
            scene.p.normal_valid.push_back(1);
            scene.q.positions.push_back(qw);
            scene.q.colors.push_back(color);
            scene.q.normals.push_back(rot * s.normal);
            scene.q.normal_valid.push_back(1);
            scene.body_id.push_back(b);
            q_rigid.push_back(qw);
        }
    }

    if (spec.jitter_sigma > 0.0) {
        std::normal_distribution<double> jit(0.0, spec.jitter_sigma);
        for (std::size_t i = 0; i < n_core; ++i)
            scene.q.positions[i] += Vec3(jit(rng), jit(rng), jit(rng));
    }

    scene.gt_flow.vectors.resize(n_core);
    for (std::size_t i = 0; i < n_core; ++i)
        scene.gt_flow.vectors[i] = (spec.gt_mode == GroundTruthMode::rigid
                                        ? q_rigid[i]
                                        : scene.q.positions[i]) -
                                   scene.p.positions[i];

    const std::size_t n_out =
        static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(n_core)));
    if (n_out > 0) {
        Vec3 lo = scene.q.positions[0];
        Vec3 hi = scene.q.positions[0];
        for (const Vec3& p : scene.q.positions) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        lo -= Vec3::Constant(1.0);
        hi += Vec3::Constant(1.0);
        for (std::size_t i = 0; i < n_out; ++i) {
            Vec3 pos;
            for (int c = 0; c < 3; ++c)
                pos(c) = lo(c) + unit(rng) * (hi(c) - lo(c));
            scene.q.positions.push_back(pos);
            scene.q.colors.push_back(quantize8(Vec3(unit(rng), unit(rng), unit(rng))));
            scene.q.normals.push_back(random_unit(rng));
            scene.q.normal_valid.push_back(1);
        }
    }
    return scene;
}

PseudoLabelSet corrupt_labels(const PseudoLabelSet& labels, double fraction, double magnitude,
                              std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("corrupt_labels: fraction must lie in [0, 1]");
    if (magnitude < 0.0) throw std::invalid_argument("corrupt_labels: magnitude must be >= 0");
    PseudoLabelSet out = labels;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> noise(-magnitude, magnitude);
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        if (i < out.valid.size() && out.valid[i] == 0) continue;
        if (unit(rng) < fraction) out.labels[i] += Vec3(noise(rng), noise(rng), noise(rng));
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("scene config: bad numeric value for '" + key + "': " + value);
    }
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("scene config: bad count value for '" + key + "': " + value);
    }
}

}  // namespace

SceneSpec parse_scene_spec(std::istream& in) {
    SceneSpec spec;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("scene config: expected key=value, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "bodies") {
            spec.body_count = parse_count(key, value);
        } else if (key == "points_per_body") {
            spec.points_per_body = parse_count(key, value);
        } else if (key == "shapes") {
            spec.shapes.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item == "plane")
                    spec.shapes.push_back(BodyShape::plane);
                else if (item == "box")
                    spec.shapes.push_back(BodyShape::box);
                else if (item == "sphere")
                    spec.shapes.push_back(BodyShape::sphere);
                else
                    throw std::runtime_error("scene config: unknown shape: " + item);
            }
        } else if (key == "color") {
            if (value == "per_body")
                spec.color_mode = ColorMode::per_body;
            else if (value == "gradient")
                spec.color_mode = ColorMode::gradient;
            else
                throw std::runtime_error("scene config: unknown color mode: " + value);
        } else if (key == "gt") {
            if (value == "rigid")
                spec.gt_mode = GroundTruthMode::rigid;
            else if (value == "observed")
                spec.gt_mode = GroundTruthMode::observed;
            else
                throw std::runtime_error("scene config: unknown gt mode: " + value);
        } else if (key == "jitter") {
            spec.jitter_sigma = parse_double(key, value);
        } else if (key == "outliers") {
            spec.outlier_fraction = parse_double(key, value);
        } else if (key == "min_gap") {
            spec.min_gap = parse_double(key, value);
        } else if (key == "spacing") {
            spec.min_point_spacing = parse_double(key, value);
        } else if (key == "scale") {
            spec.body_scale = parse_double(key, value);
        } else if (key == "max_rotation") {
            spec.max_rotation = parse_double(key, value);
        } else if (key == "max_translation") {
            spec.max_translation = parse_double(key, value);
        } else if (key == "seed") {
            spec.seed = parse_count(key, value);
        } else {
            throw std::runtime_error("scene config: unknown key: " + key);
        }
    }
    return spec;
}

SceneSpec parse_scene_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scene config: cannot open " + path);
    return parse_scene_spec(in);
}

}  // namespace otflow
