#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "previz/camera.hpp"
#include "previz/image_io.hpp"
#include "previz/losses.hpp"
#include "previz/mask.hpp"
#include "previz/primitives.hpp"
#include "previz/raster.hpp"
#include "test_support.hpp"

using namespace previz;

namespace {

Camera front_camera(int size = 128, double focal = 120.0) {
    Camera cam;
    cam.fx = cam.fy = focal;
    cam.cx = cam.cy = size / 2.0;
    cam.width = cam.height = size;
    cam.validate();
    return cam;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("previz_sil_" + name);
}

// Brute-force signed pixel distance oracle, same half-pixel convention the
// library documents: +- (distance to the nearest opposite-class pixel - 0.5).
double signed_distance_oracle(const BinaryMask& mask, int x, int y) {
    const bool inside = mask.at(x, y) != 0;
    double best = std::numeric_limits<double>::infinity();
    for (int yy = 0; yy < mask.height; ++yy) {
        for (int xx = 0; xx < mask.width; ++xx) {
            if ((mask.at(xx, yy) != 0) != inside) {
                const double d = std::hypot(xx - x, yy - y);
                best = std::min(best, d);
            }
        }
    }
    if (!std::isfinite(best)) {
        best = mask.width + mask.height;
    }
    best = std::min(best, double(mask.width + mask.height));
    return inside ? best - 0.5 : 0.5 - best;
}

}  // namespace

TEST_CASE("full-frustum triangle covers every pixel") {
    const Camera cam = front_camera();
    TriMesh tri;
    tri.vertices = {{-100, -100, 5}, {300, -100, 5}, {-100, 300, 5}};
    tri.faces = {{0, 1, 2}};
    const BinaryMask mask = rasterize_silhouette(tri, cam);
    CHECK(mask.count_set() == size_t(cam.width) * cam.height);
}

TEST_CASE("cube silhouette bbox matches hand projection of corners") {
    const Camera cam = front_camera(128, 120.0);
    const TriMesh cube = make_box(Vec3(0.2, -0.1, 5.0), Vec3::Ones());
    const BinaryMask mask = rasterize_silhouette(cube, cam);

    double px0 = 1e9, px1 = -1e9, py0 = 1e9, py1 = -1e9;
    for (const auto& v : cube.vertices) {
        const Vec2 p = cam.project(v);
        px0 = std::min(px0, p.x());
        px1 = std::max(px1, p.x());
        py0 = std::min(py0, p.y());
        py1 = std::max(py1, p.y());
    }
    int mx0 = cam.width, mx1 = -1, my0 = cam.height, my1 = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y)) {
                mx0 = std::min(mx0, x);
                mx1 = std::max(mx1, x);
                my0 = std::min(my0, y);
                my1 = std::max(my1, y);
            }
        }
    }
    CHECK(std::abs(mx0 + 0.5 - px0) <= 1.0);
    CHECK(std::abs(mx1 + 0.5 - px1) <= 1.0);
    CHECK(std::abs(my0 + 0.5 - py0) <= 1.0);
    CHECK(std::abs(my1 + 0.5 - py1) <= 1.0);
}

TEST_CASE("total occlusion empties the mask; behind-camera mesh is empty, not an error") {
    const Camera cam = front_camera();
    const TriMesh cube = make_box(Vec3(0, 0, 5), Vec3::Ones());
    TriMesh wall;
    wall.vertices = {{-100, -100, 2}, {300, -100, 2}, {-100, 300, 2}};
    wall.faces = {{0, 1, 2}};
    CHECK(rasterize_silhouette(cube, cam, &wall).count_set() == 0);

    const TriMesh behind = make_box(Vec3(0, 0, -5), Vec3::Ones());
    CHECK(rasterize_silhouette(behind, cam).count_set() == 0);

    Camera bad = cam;
    bad.fx = -1.0;
    CHECK_THROWS_AS(rasterize_silhouette(cube, bad), std::invalid_argument);
}

TEST_CASE("occluder strictly behind leaves the mask unchanged") {
    const Camera cam = front_camera();
    const TriMesh cube = make_box(Vec3(0, 0, 5), Vec3::Ones());
    const TriMesh back_wall = make_box(Vec3(0, 0, 9), Vec3(20, 20, 0.1));
    const BinaryMask plain = rasterize_silhouette(cube, cam);
    const BinaryMask occluded = rasterize_silhouette(cube, cam, &back_wall);
    CHECK(plain.bits == occluded.bits);
}

TEST_CASE("occlusion monotonicity: an occluder never adds set pixels") {
    const Camera cam = front_camera();
    for (uint64_t seed : {3ull, 4ull, 5ull}) {
        Rng rng(seed);
        const TriMesh blob = testing::random_blob(seed, 2);
        TriMesh mesh = blob;
        for (auto& v : mesh.vertices) {
            v += Vec3(0, 0, 5);
        }
        const TriMesh occ = make_box(
            Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(3.0, 6.0)),
            Vec3(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.2, 1.0)));
        const BinaryMask plain = rasterize_silhouette(mesh, cam);
        const BinaryMask occluded = rasterize_silhouette(mesh, cam, &occ);
        for (size_t i = 0; i < plain.bits.size(); ++i) {
            CHECK(occluded.bits[i] <= plain.bits[i]);
        }
    }
}

TEST_CASE("resolution equivariance: 2x image quadruples coverage for a sphere") {
    const TriMesh sphere = make_icosphere(Vec3(0, 0, 5), 1.0, 3);
    const Camera lo = front_camera(96, 90.0);
    Camera hi = front_camera(192, 180.0);
    const double n_lo = static_cast<double>(rasterize_silhouette(sphere, lo).count_set());
    const double n_hi = static_cast<double>(rasterize_silhouette(sphere, hi).count_set());
    CHECK(n_hi / n_lo == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("parallel rasterizer equals the serial reference bitwise") {
    const Camera cam = front_camera();
    TriMesh mesh = testing::random_blob(9, 3);
    for (auto& v : mesh.vertices) {
        v += Vec3(0, 0, 4);
    }
    const DepthMap fast = rasterize_depth(mesh, cam);
    const DepthMap slow = reference::rasterize_depth(mesh, cam);
    CHECK(fast.values == slow.values);
}

TEST_CASE("signed distance field equals the brute-force oracle") {
    Rng rng(21);
    BinaryMask mask(23, 17);
    for (auto& b : mask.bits) {
        b = rng.uniform() < 0.4 ? 1 : 0;
    }
    const auto sdf = signed_distance_field(mask);
    const auto sdf_ref = reference::signed_distance_field(mask);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const double expected = signed_distance_oracle(mask, x, y);
            CHECK(sdf[y * mask.width + x] == doctest::Approx(expected).epsilon(1e-12));
            CHECK(sdf_ref[y * mask.width + x] ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("signed distance handles all-set and all-unset masks") {
    BinaryMask full(8, 8);
    std::fill(full.bits.begin(), full.bits.end(), uint8_t{1});
    const auto sdf_full = signed_distance_field(full);
    for (double v : sdf_full) {
        CHECK(v >= 8.0);  // clamped large positive
    }
    BinaryMask empty(8, 8);
    const auto sdf_empty = signed_distance_field(empty);
    for (double v : sdf_empty) {
        CHECK(v <= -8.0);
    }
}

TEST_CASE("soft silhouette: tails, interface value, hard/soft consistency") {
    const Camera cam = front_camera(128, 120.0);
    // box whose vertical edges project exactly onto integer pixel grid lines:
    // half-width w at depth z with fx*w/z = 24 px and cx = 64
    const TriMesh slab = make_box(Vec3(0, 0, 5), Vec3(2.0, 1.0, 0.2));
    SoftRasterSettings settings;
    settings.sharpness = 1.0;
    const SoftMask soft = soft_silhouette(slab, cam, settings);
    const BinaryMask hard = rasterize_silhouette(slab, cam);

    // projected right edge: fx * 1.0 / 5.1..4.9 -> use front face depth 4.9
    const double edge_x = cam.fx * 1.0 / 4.9 + cam.cx;
    // far-outside pixel: > 100 sigmoid units away
    CHECK(soft.at(5, 5) < 1e-3);

    // straddling pixels bracket 0.5 and average to it at the interface
    const int left_px = static_cast<int>(std::floor(edge_x - 0.5));  // center inside
    const int right_px = left_px + 1;
    const int mid_y = 64;
    REQUIRE(hard.at(left_px, mid_y) == 1);
    REQUIRE(hard.at(right_px, mid_y) == 0);
    CHECK(soft.at(left_px, mid_y) == doctest::Approx(sigmoid(0.5)).epsilon(1e-9));
    CHECK(soft.at(right_px, mid_y) == doctest::Approx(sigmoid(-0.5)).epsilon(1e-9));
    // bilinear sample exactly on the set/unset interface
    CHECK(0.5 * (soft.at(left_px, mid_y) + soft.at(right_px, mid_y)) ==
          doctest::Approx(0.5).epsilon(1e-9));

    // sharpness >= 50: thresholdable pixels agree with the hard mask
    settings.sharpness = 50.0;
    const SoftMask crisp = soft_silhouette(slab, cam, settings);
    size_t consistent = 0, decisive = 0;
    for (size_t i = 0; i < crisp.values.size(); ++i) {
        if (crisp.values[i] > 0.9) {
            ++decisive;
            consistent += hard.bits[i] == 1;
        } else if (crisp.values[i] < 0.1) {
            ++decisive;
            consistent += hard.bits[i] == 0;
        }
    }
    CHECK(decisive > 0);
    CHECK(static_cast<double>(consistent) >= 0.99 * static_cast<double>(decisive));
}

TEST_CASE("soft silhouette with occluder: soft depth factor and hard rule") {
    const Camera cam = front_camera();
    const TriMesh cube = make_box(Vec3(0, 0, 5), Vec3::Ones());
    SoftRasterSettings settings;
    settings.sharpness = 2.0;
    settings.depth_sharpness = 100.0;

    const SoftMask plain = soft_silhouette(cube, cam, settings);

    // occluder in front suppresses covered pixels toward 0
    const TriMesh front_wall = make_box(Vec3(0, 0, 3), Vec3(20, 20, 0.1));
    const SoftMask blocked = soft_silhouette(cube, cam, settings, &front_wall);
    // deep inside the cube's silhouette, previously ~1
    CHECK(plain.at(64, 64) > 0.99);
    CHECK(blocked.at(64, 64) < 1e-6);

    // occluder behind changes nothing materially
    const TriMesh back_wall = make_box(Vec3(0, 0, 9), Vec3(20, 20, 0.1));
    const SoftMask open = soft_silhouette(cube, cam, settings, &back_wall);
    for (size_t i = 0; i < open.values.size(); ++i) {
        // mesh-absent pixels fall to the hard rule (0 under the occluder)
        if (plain.values[i] > 0.5) {
            CHECK(open.values[i] == doctest::Approx(plain.values[i]).epsilon(1e-6));
        }
    }

    // occluder at the mesh depth: factor near sigmoid(0) = 0.5
    const TriMesh level_wall = make_box(Vec3(0, 0, 4.5 - 1e-9), Vec3(20, 20, 1e-6));
    const SoftMask half = soft_silhouette(cube, cam, settings, &level_wall);
    CHECK(half.at(64, 64) == doctest::Approx(0.5 * plain.at(64, 64)).epsilon(1e-3));
}

TEST_CASE("finite-difference translation gradient of the mean soft value is consistent") {
    const Camera cam = front_camera(128, 120.0);
    SoftRasterSettings settings;
    settings.sharpness = 0.8;
    const TriMesh sphere = make_icosphere(Vec3::Zero(), 0.8, 3);

    const auto mean_soft = [&](const Vec3& offset) {
        TriMesh moved = sphere;
        for (auto& v : moved.vertices) {
            v += Vec3(0, 0, 4.0) + offset;
        }
        return soft_silhouette(moved, cam, settings).mean();
    };
    // one pixel of screen motion is about 4/120 = 0.033 world units
    const double h1 = 0.04, h2 = 0.02;
    for (int axis = 0; axis < 2; ++axis) {
        Vec3 e = Vec3::Zero();
        e[axis] = 1.0;
        const double g1 = (mean_soft(h1 * e) - mean_soft(-h1 * e)) / (2 * h1);
        const double g2 = (mean_soft(h2 * e) - mean_soft(-h2 * e)) / (2 * h2);
        CHECK(std::abs(g1 - g2) / std::max(std::abs(g2), 1e-12) < 1e-2);
    }
}

TEST_CASE("camera json round trip") {
    const Camera cam = make_look_at_camera(Vec3(1, 2, -3), Vec3(0, 0.5, 0), Vec3(0, 1, 0),
                                           200.0, 320, 240);
    const auto path = temp_file("camera.json");
    save_camera(cam, path);
    const Camera loaded = load_camera(path);
    CHECK((loaded.rotation - cam.rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((loaded.translation - cam.translation).norm() < 1e-12);
    CHECK(loaded.fx == cam.fx);
    CHECK(loaded.width == cam.width);
}

TEST_CASE("mask png round trips") {
    Rng rng(77);
    BinaryMask mask(31, 19);
    for (auto& b : mask.bits) {
        b = rng.uniform() < 0.5 ? 1 : 0;
    }
    const auto path = temp_file("mask.png");
    save_mask_png(mask, path);
    const BinaryMask loaded = load_mask_png(path);
    CHECK(loaded.width == mask.width);
    CHECK(loaded.bits == mask.bits);

    SoftMask soft(13, 9);
    for (auto& v : soft.values) {
        v = rng.uniform();
    }
    const auto soft_path = temp_file("soft.png");
    save_soft_mask_png(soft, soft_path);
    const SoftMask sloaded = load_soft_mask_png(soft_path);
    for (size_t i = 0; i < soft.values.size(); ++i) {
        CHECK(std::abs(sloaded.values[i] - soft.values[i]) <= 0.5 / 255.0 + 1e-12);
    }
}
