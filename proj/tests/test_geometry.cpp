#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "previz/body_parts.hpp"
#include "previz/mesh.hpp"
#include "previz/primitives.hpp"
#include "previz/sdf.hpp"
#include "test_support.hpp"

using namespace previz;

namespace {
std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("previz_geo_" + name);
}
}  // namespace

TEST_CASE("mesh validation rejects bad faces") {
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    mesh.faces = {{0, 1, 3}};
    CHECK_THROWS_AS(mesh.validate(), std::invalid_argument);
    mesh.faces = {{0, 1, 1}};
    CHECK_THROWS_AS(mesh.validate(), std::invalid_argument);
    mesh.faces = {{0, 1, 2}};
    CHECK_NOTHROW(mesh.validate());
}

TEST_CASE("obj round trip") {
    const TriMesh box = make_box(Vec3(0.5, -1.0, 2.0), Vec3(1.0, 2.0, 3.0));
    const auto path = temp_file("box.obj");
    save_obj(box, path);
    const TriMesh loaded = load_obj(path);
    REQUIRE(loaded.vertices.size() == box.vertices.size());
    REQUIRE(loaded.faces.size() == box.faces.size());
    for (size_t i = 0; i < box.vertices.size(); ++i) {
        CHECK((loaded.vertices[i] - box.vertices[i]).norm() == doctest::Approx(0.0));
    }
    CHECK(loaded.faces == box.faces);
}

TEST_CASE("obj parser handles slashed indices and polygons") {
    const auto path = temp_file("poly.obj");
    {
        std::ofstream out(path);
        out << "# comment\n";
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n";
        out << "vn 0 0 1\nvt 0 0\n";
        out << "f 1/1/1 2/2/1 3/3/1 4/4/1\n";  // quad -> two triangles
        out << "f -4//1 -3//1 -2//1\n";        // negative (relative) indices
    }
    const TriMesh mesh = load_obj(path);
    CHECK(mesh.vertices.size() == 4);
    CHECK(mesh.faces.size() == 3);
    CHECK(mesh.faces[0] == std::array<int, 3>{0, 1, 2});
    CHECK(mesh.faces[1] == std::array<int, 3>{0, 2, 3});
    CHECK(mesh.faces[2] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("ply binary and ascii round trip") {
    const TriMesh blob = testing::random_blob(7, 1);
    const auto bin_path = temp_file("blob.ply");
    save_ply_binary(blob, bin_path);
    const TriMesh loaded = load_ply(bin_path);
    REQUIRE(loaded.vertices.size() == blob.vertices.size());
    REQUIRE(loaded.faces == blob.faces);
    for (size_t i = 0; i < blob.vertices.size(); ++i) {
        CHECK((loaded.vertices[i] - blob.vertices[i]).norm() < 1e-6);  // f32 quantization
    }

    // hand-written ascii fixture with extra properties to skip
    const auto ascii_path = temp_file("tri.ply");
    {
        std::ofstream out(ascii_path);
        out << "ply\nformat ascii 1.0\ncomment test\n";
        out << "element vertex 3\n";
        out << "property float x\nproperty float y\nproperty float z\n";
        out << "property uchar red\n";
        out << "element face 1\n";
        out << "property list uchar int vertex_indices\n";
        out << "end_header\n";
        out << "0 0 0 255\n1 0 0 10\n0 1 0 20\n";
        out << "3 0 1 2\n";
    }
    const TriMesh tri = load_ply(ascii_path);
    REQUIRE(tri.vertices.size() == 3);
    REQUIRE(tri.faces.size() == 1);
    CHECK(tri.vertices[1].x() == doctest::Approx(1.0));
}

TEST_CASE("part label sidecar round trip and validation") {
    TriMesh mesh = make_box(Vec3::Zero(), Vec3::Ones());
    std::vector<uint8_t> labels(mesh.vertices.size(), kNoPartLabel);
    labels[0] = *body_part_index("buttocks");
    labels[1] = *body_part_index("buttocks");
    labels[5] = *body_part_index("back");
    mesh.part_labels = labels;
    const auto path = temp_file("parts.json");
    save_part_labels(mesh, path);

    TriMesh reloaded = make_box(Vec3::Zero(), Vec3::Ones());
    load_part_labels(reloaded, path);
    CHECK(*reloaded.part_labels == labels);

    const std::vector<uint8_t> query_parts = {*body_part_index("buttocks")};
    const auto selected = vertices_with_parts(reloaded, query_parts);
    CHECK(selected == std::vector<int>{0, 1});

    // unknown part name rejected
    const auto bad_path = temp_file("bad_parts.json");
    {
        std::ofstream out(bad_path);
        out << R"({"version":1,"parts":[{"name":"torso","ranges":[[0,2]]}]})";
    }
    CHECK_THROWS_WITH_AS(load_part_labels(reloaded, bad_path),
                         doctest::Contains("torso"), std::runtime_error);
}

TEST_CASE("sdf of unit cube: analytic values at nodes") {
    const TriMesh cube = make_box(Vec3::Zero(), Vec3::Ones());
    const SdfGrid grid = build_sdf(cube, 48, 0.1);
    // with even resolution the cube center and (0.6, 0, 0) are lattice nodes
    const auto center = sample_sdf(grid, Vec3::Zero());
    CHECK(center.value == doctest::Approx(-0.5).epsilon(1e-9));
    const auto outside = sample_sdf(grid, Vec3(2.0, 0.0, 0.0));
    CHECK(outside.value == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("sdf build errors") {
    TriMesh empty;
    CHECK_THROWS_AS(build_sdf(empty, 32, 0.1), std::invalid_argument);
    const TriMesh cube = make_box(Vec3::Zero(), Vec3::Ones());
    CHECK_THROWS_AS(build_sdf(cube, 7, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_sdf(cube, 32, 0.0), std::invalid_argument);
}

TEST_CASE("sample_sdf interpolation identities") {
    const TriMesh blob = testing::random_blob(3, 2);
    const SdfGrid grid = build_sdf(blob, 24, 0.1);
    // node identity
    const Vec3 node = grid.node_position(5, 7, 9);
    CHECK(sample_sdf(grid, node).value == doctest::Approx(grid.at(5, 7, 9)).epsilon(1e-12));
    // edge midpoint = average of endpoints
    const Vec3 mid = 0.5 * (grid.node_position(5, 7, 9) + grid.node_position(6, 7, 9));
    CHECK(sample_sdf(grid, mid).value ==
          doctest::Approx(0.5 * (grid.at(5, 7, 9) + grid.at(6, 7, 9))).epsilon(1e-12));
}

TEST_CASE("sample_sdf gradient matches central differences") {
    const TriMesh blob = testing::random_blob(11, 2);
    const SdfGrid grid = build_sdf(blob, 24, 0.1);
    const double h = grid.cell_size / 100.0;
    Rng rng(99);
    int checked = 0;
    while (checked < 100) {
        // stay away from cell boundaries, where the trilinear gradient jumps
        const int i = static_cast<int>(rng.uniform_int(1, grid.dims[0] - 3));
        const int j = static_cast<int>(rng.uniform_int(1, grid.dims[1] - 3));
        const int k = static_cast<int>(rng.uniform_int(1, grid.dims[2] - 3));
        const Vec3 frac(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
        const Vec3 p = grid.node_position(i, j, k) + grid.cell_size * frac;
        const auto sample = sample_sdf(grid, p);
        Vec3 fd;
        for (int a = 0; a < 3; ++a) {
            Vec3 dp = Vec3::Zero();
            dp[a] = h;
            fd[a] = (sample_sdf(grid, p + dp).value - sample_sdf(grid, p - dp).value) / (2 * h);
        }
        const double rel = (sample.gradient - fd).norm() / std::max(fd.norm(), 1e-12);
        CHECK(rel < 1e-4);
        ++checked;
    }
}

TEST_CASE("sdf signs match the single-ray parity oracle on an icosphere") {
    const TriMesh sphere = make_icosphere(Vec3::Zero(), 1.0, 3);
    const SdfGrid grid = build_sdf(sphere, 32, 0.1);
    Rng rng(42);
    int agree = 0;
    const int total = 1000;
    for (int n = 0; n < total; ++n) {
        const int i = static_cast<int>(rng.uniform_int(0, grid.dims[0] - 1));
        const int j = static_cast<int>(rng.uniform_int(0, grid.dims[1] - 1));
        const int k = static_cast<int>(rng.uniform_int(0, grid.dims[2] - 1));
        const Vec3 p = grid.node_position(i, j, k);
        const bool inside_oracle =
            testing::parity_inside_oracle(sphere, p, Vec3(1.0, 0.0, 0.0));
        const bool inside_grid = grid.at(i, j, k) < 0.0;
        if (inside_oracle == inside_grid) {
            ++agree;
        }
    }
    CHECK(agree >= total * 0.999);
}

TEST_CASE("sdf sign convention: closed mesh has negative minimum, positive outside bbox") {
    const TriMesh blob = testing::random_blob(17, 2);
    const SdfGrid grid = build_sdf(blob, 24, 0.15);
    CHECK(grid.min_value() < 0.0);
    const Aabb box = blob.bounds();
    for (int k = 0; k < grid.dims[2]; ++k) {
        for (int j = 0; j < grid.dims[1]; ++j) {
            for (int i = 0; i < grid.dims[0]; ++i) {
                const Vec3 p = grid.node_position(i, j, k);
                const bool outside_bbox = (p.array() < box.lo.array()).any() ||
                                          (p.array() > box.hi.array()).any();
                if (outside_bbox) {
                    CHECK(grid.at(i, j, k) > 0.0);
                }
            }
        }
    }
}

TEST_CASE("sdf is translation-equivariant") {
    const TriMesh blob = testing::random_blob(23, 2);
    const Vec3 shift(0.37, -1.25, 2.01);
    TriMesh moved = blob;
    for (auto& v : moved.vertices) {
        v += shift;
    }
    const SdfGrid g0 = build_sdf(blob, 20, 0.1);
    const SdfGrid g1 = build_sdf(moved, 20, 0.1);
    Rng rng(5);
    for (int n = 0; n < 200; ++n) {
        const Vec3 p(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
        CHECK(sample_sdf(g0, p).value ==
              doctest::Approx(sample_sdf(g1, p + shift).value).epsilon(1e-6));
    }
}

TEST_CASE("sample_sdf is 1-Lipschitz across cell boundaries up to discretization") {
    const TriMesh blob = testing::random_blob(31, 2);
    const SdfGrid grid = build_sdf(blob, 20, 0.1);
    Rng rng(8);
    for (int n = 0; n < 300; ++n) {
        const Vec3 p(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        Vec3 q = p;
        q[static_cast<int>(rng.uniform_int(0, 2))] += grid.cell_size * 0.5;
        const double sep = (q - p).norm();
        const double diff = std::abs(sample_sdf(grid, p).value - sample_sdf(grid, q).value);
        CHECK(diff <= sep + 2.0 * grid.cell_size);
    }
}

TEST_CASE("parallel sdf equals the serial reference bitwise") {
    for (uint64_t seed : {1ull, 2ull}) {
        const TriMesh blob = testing::random_blob(seed, 2);
        const SdfGrid fast = build_sdf(blob, 16, 0.1);
        const SdfGrid slow = reference::build_sdf(blob, 16, 0.1);
        REQUIRE(fast.dims == slow.dims);
        REQUIRE(fast.values.size() == slow.values.size());
        size_t mismatches = 0;
        for (size_t i = 0; i < fast.values.size(); ++i) {
            if (fast.values[i] != slow.values[i]) {
                ++mismatches;
            }
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("icosphere sdf tracks the analytic sphere distance") {
    const TriMesh sphere = make_icosphere(Vec3::Zero(), 1.0, 4);
    const SdfGrid grid = build_sdf(sphere, 32, 0.1);
    Rng rng(12);
    for (int n = 0; n < 500; ++n) {
        const Vec3 p(rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1));
        const double analytic = p.norm() - 1.0;
        CHECK(std::abs(sample_sdf(grid, p).value - analytic) <= 2.0 * grid.cell_size);
    }
}

TEST_CASE("surface sampling is deterministic and on-surface") {
    const TriMesh cube = make_box(Vec3::Zero(), Vec3::Ones());
    const auto a = sample_surface_points(cube, 64, 9);
    const auto b = sample_surface_points(cube, 64, 9);
    REQUIRE(a.size() == 64);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK(a[i].cwiseAbs().maxCoeff() == doctest::Approx(0.5).epsilon(1e-12));
    }
}
