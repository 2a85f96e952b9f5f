#include "otflow/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace otflow;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "otflow-io-tests";
        fs::create_directories(d);
        return d;
    }();
    return (dir / name).string();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PointCloud canonical_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    std::uniform_int_distribution<int> byte(0, 255);
    std::bernoulli_distribution drop(0.2);
    PointCloud c;
    c.positions.resize(n);
    c.colors.resize(n);
    c.normals.resize(n);
    c.normal_valid.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.positions[i] = Vec3(u(rng), u(rng), u(rng));
        c.colors[i] = Vec3(byte(rng), byte(rng), byte(rng)) / 255.0;
        if (drop(rng)) {
            c.normals[i] = Vec3::Zero();
            c.normal_valid[i] = 0;
        } else {
            c.normals[i] = Vec3(u(rng), u(rng), u(rng)).normalized();
            c.normal_valid[i] = 1;
        }
    }
    return c;
}

void check_identical(const PointCloud& a, const PointCloud& b) {
    REQUIRE(a.size() == b.size());
    REQUIRE(a.has_colors() == b.has_colors());
    REQUIRE(a.has_normals() == b.has_normals());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK((a.positions[i] - b.positions[i]).norm() == 0.0);
        if (a.has_colors()) CHECK((a.colors[i] - b.colors[i]).norm() == 0.0);
        if (a.has_normals()) {
            CHECK(a.normal_valid[i] == b.normal_valid[i]);
            CHECK((a.normals[i] - b.normals[i]).norm() == 0.0);
        }
    }
}

const char* kAsciiFixture =
    "ply\n"
    "format ascii 1.0\n"
    "comment hand-written fixture\n"
    "element vertex 2\n"
    "property double x\n"
    "property double y\n"
    "property double z\n"
    "property float intensity\n"
    "property uchar red\n"
    "property uchar green\n"
    "property uchar blue\n"
    "end_header\n"
    "0 0 0 0.5 255 0 0\n"
    "1.5 -2 0.25 0.25 0 128 255\n";

}  // namespace

TEST_SUITE("io") {

TEST_CASE("a hand-written ascii file parses, skipping unknown properties") {
    const std::string path = tmp_path("fixture.ply");
    write_text(path, kAsciiFixture);
    const PointCloud c = read_cloud(path);
    REQUIRE(c.size() == 2);
    CHECK((c.positions[0] - Vec3(0, 0, 0)).norm() == 0.0);
    CHECK((c.positions[1] - Vec3(1.5, -2, 0.25)).norm() == 0.0);
    REQUIRE(c.has_colors());
    CHECK((c.colors[0] - Vec3(1, 0, 0)).norm() == 0.0);
    CHECK((c.colors[1] - Vec3(0, 128.0 / 255.0, 1)).norm() == 0.0);
    CHECK_FALSE(c.has_normals());
}

TEST_CASE("float colors are used directly, integer colors are scaled") {
    const std::string path = tmp_path("float_color.ply");
    write_text(path,
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float red\nproperty float green\nproperty float blue\n"
               "end_header\n"
               "1 2 3 0.5 0.25 1\n");
    const PointCloud c = read_cloud(path);
    CHECK((c.colors[0] - Vec3(0.5, 0.25, 1.0)).norm() == 0.0);
}

TEST_CASE("stored normal validity follows the unit-norm rule") {
    const std::string path = tmp_path("normals.ply");
    write_text(path,
               "ply\nformat ascii 1.0\nelement vertex 2\n"
               "property double x\nproperty double y\nproperty double z\n"
               "property double nx\nproperty double ny\nproperty double nz\n"
               "end_header\n"
               "0 0 0 0 0 1\n"
               "1 0 0 0 0 0.5\n");
    const PointCloud c = read_cloud(path);
    CHECK(c.normal_valid[0] == 1);
    CHECK(c.normal_valid[1] == 0);
}

TEST_CASE("zero-count extra elements are tolerated") {
    const std::string path = tmp_path("face0.ply");
    write_text(path,
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property double x\nproperty double y\nproperty double z\n"
               "element face 0\nproperty list uchar int vertex_indices\n"
               "end_header\n"
               "1 2 3\n");
    CHECK(read_cloud(path).size() == 1);
}

TEST_CASE("both formats round-trip bit-exactly") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const PointCloud c = canonical_cloud(64, seed);
        const std::string a = tmp_path("rt_ascii.ply");
        const std::string b = tmp_path("rt_bin.ply");
        write_cloud(a, c, PlyFormat::ascii);
        write_cloud(b, c, PlyFormat::binary_little_endian);
        // invalid normals are canonicalized to zero on write, matching c
        check_identical(read_cloud(a), c);
        check_identical(read_cloud(b), c);
    }
}

TEST_CASE("positions-only clouds round-trip without attribute blocks") {
    PointCloud c;
    c.positions = {Vec3(0.1, -0.2, 0.3), Vec3(7, 8, 9)};
    const std::string path = tmp_path("bare.ply");
    write_cloud(path, c, PlyFormat::ascii);
    const PointCloud back = read_cloud(path);
    CHECK_FALSE(back.has_colors());
    CHECK_FALSE(back.has_normals());
    check_identical(back, c);
}

TEST_CASE("malformed ply files produce specific errors") {
    auto expect_throw = [](const std::string& name, const std::string& content,
                           const char* needle) {
        const std::string path = tmp_path(name);
        write_text(path, content);
        CHECK_THROWS_WITH_AS(read_cloud(path), doctest::Contains(needle), std::runtime_error);
    };

    expect_throw("bad_magic.ply", "nope\n", "magic");
    expect_throw("big_endian.ply",
                 "ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
                 "property double x\nproperty double y\nproperty double z\nend_header\n",
                 "binary_big_endian");
    expect_throw("truncated.ply",
                 "ply\nformat ascii 1.0\nelement vertex 2\n"
                 "property double x\nproperty double y\nproperty double z\nend_header\n"
                 "1 2 3\n",
                 "count mismatch");
    expect_throw("partial_color.ply",
                 "ply\nformat ascii 1.0\nelement vertex 0\n"
                 "property double x\nproperty double y\nproperty double z\n"
                 "property uchar red\nend_header\n",
                 "partial");
    expect_throw("vertex_list.ply",
                 "ply\nformat ascii 1.0\nelement vertex 1\n"
                 "property list uchar int x\nend_header\n",
                 "list");
    expect_throw("no_xyz.ply",
                 "ply\nformat ascii 1.0\nelement vertex 0\n"
                 "property double x\nproperty double y\nend_header\n",
                 "x/y/z");
    expect_throw("face_nonzero.ply",
                 "ply\nformat ascii 1.0\nelement vertex 0\n"
                 "property double x\nproperty double y\nproperty double z\n"
                 "element face 2\nend_header\n",
                 "unsupported element");
    expect_throw("no_end.ply", "ply\nformat ascii 1.0\nelement vertex 0\n", "end_header");

    // binary truncation: header promises two vertices, body carries one
    PointCloud one;
    one.positions = {Vec3(1, 2, 3)};
    const std::string bin = tmp_path("bin_trunc.ply");
    write_cloud(bin, one, PlyFormat::binary_little_endian);
    std::string data = slurp(bin);
    const auto pos = data.find("element vertex 1");
    REQUIRE(pos != std::string::npos);
    data.replace(pos, 16, "element vertex 2");
    write_text(bin, data);
    CHECK_THROWS_WITH_AS(read_cloud(bin), doctest::Contains("count mismatch"),
                         std::runtime_error);
}

TEST_CASE("flow fields round-trip through the binary container") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> u(-10.0f, 10.0f);
    std::vector<Vec3> v(37);
    for (auto& x : v) x = Vec3(u(rng), u(rng), u(rng));  // float-representable by construction
    const FlowField flow(std::move(v));

    const std::string path = tmp_path("flow.sfl");
    write_flow(path, flow);
    const FlowFile back = read_flow(path);
    CHECK_FALSE(back.has_validity);
    REQUIRE(back.flow.size() == flow.size());
    for (std::size_t i = 0; i < flow.size(); ++i)
        CHECK((back.flow.vectors[i] - flow.vectors[i]).norm() == 0.0);
    CHECK(fs::file_size(path) == 9 + 37 * 12);
}

TEST_CASE("label sets carry their validity mask") {
    PseudoLabelSet labels;
    labels.labels = {Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 3)};
    labels.valid = {1, 0, 1};
    const std::string path = tmp_path("labels.sfl");
    write_flow(path, labels);
    const FlowFile back = read_flow(path);
    CHECK(back.has_validity);
    CHECK(back.valid == labels.valid);
    CHECK(fs::file_size(path) == 9 + 3 * 12 + 3);
}

TEST_CASE("an empty flow file is exactly nine bytes") {
    const std::string path = tmp_path("empty.sfl");
    write_flow(path, FlowField{});
    CHECK(fs::file_size(path) == 9);
    const FlowFile back = read_flow(path);
    CHECK(back.flow.size() == 0);
    CHECK_FALSE(back.has_validity);
}

TEST_CASE("corrupt flow files are rejected") {
    const std::string path = tmp_path("corrupt.sfl");
    write_text(path, "JUNK\x01\x00\x00\x00\x00");
    CHECK_THROWS_WITH_AS(read_flow(path), doctest::Contains("magic"), std::runtime_error);

    const FlowField flow(std::vector<Vec3>{Vec3(1, 2, 3), Vec3(4, 5, 6)});
    write_flow(path, flow);
    std::string data = slurp(path);

    write_text(path, data.substr(0, data.size() - 2));  // truncated
    CHECK_THROWS_WITH_AS(read_flow(path), doctest::Contains("count mismatch"),
                         std::runtime_error);

    write_text(path, data + "x");  // trailing junk
    CHECK_THROWS_WITH_AS(read_flow(path), doctest::Contains("count mismatch"),
                         std::runtime_error);
}

}  // TEST_SUITE
