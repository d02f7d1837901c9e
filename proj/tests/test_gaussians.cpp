#include "splatprop/gaussians.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <filesystem>

using namespace splatprop;
namespace spt = splatprop::testing;

TEST_CASE("covariance: axis-aligned case and symmetry") {
  Gaussian g;
  g.log_scales = Vec3(std::log(2.0), std::log(3.0), std::log(0.5));
  const Mat3 sigma = covariance(g);
  CHECK((sigma - Vec3(4.0, 9.0, 0.25).asDiagonal().toDenseMatrix()).norm() < 1e-12);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    Gaussian r;
    r.rotation = spt::random_unit_quaternion(rng);
    r.log_scales = Vec3::Random();
    const Mat3 s = covariance(r);
    CHECK((s - s.transpose()).norm() < 1e-12);
  }
}

TEST_CASE("covariance eigenvalues match the squared scales (eigen-solver oracle)") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    Gaussian g;
    g.rotation = spt::random_unit_quaternion(rng);
    g.log_scales = Vec3::Random() * 1.5;
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(covariance(g));
    Vec3 expected = g.scales().array().square();
    std::sort(expected.data(), expected.data() + 3);
    CHECK((eig.eigenvalues() - expected).cwiseAbs().maxCoeff() < 1e-9);
    // SPD within roundoff of the smallest scale
    CHECK(eig.eigenvalues()(0) >= expected(0) - 1e-9);
  }
}

TEST_CASE("view_depth: trivial poses and cross-check against project") {
  Gaussian g;
  g.position = Vec3(0, 0, 5);
  CHECK(view_depth(g, Pose{}) == doctest::Approx(5.0));

  Pose shifted;
  shifted.translation = Vec3(0, 0, -5);
  CHECK(view_depth(g, shifted) == doctest::Approx(0.0));

  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const Intrinsics K = spt::random_intrinsics(rng);
    const Pose pose = spt::random_pose(rng);
    const Gaussian r = spt::random_gaussian(rng, K, pose);
    const auto p = project(K, pose, r.position);
    REQUIRE(p.has_value());
    CHECK(view_depth(r, pose) == doctest::Approx(p->depth).epsilon(1e-12));
  }
}

TEST_CASE("shortest_axis_normal: orientation and tie-breaking") {
  Gaussian g;
  g.log_scales = Vec3(0.0, 0.0, std::log(0.01));
  const Vec3 n = shortest_axis_normal(g, Vec3(0, 0, -5));
  CHECK((n - Vec3(0, 0, -1)).norm() < 1e-12);

  // rotation mapping e_z to e_y: the shortest axis lands on +-y
  Gaussian h;
  h.rotation = Vec4(std::cos(M_PI / 4), std::sin(M_PI / 4), 0.0, 0.0);  // 90 deg about x
  h.log_scales = Vec3(0.0, 0.0, std::log(0.01));
  const Vec3 above = shortest_axis_normal(h, Vec3(0, 5, 0));
  CHECK((above - Vec3(0, 1, 0)).norm() < 1e-9);
  const Vec3 below = shortest_axis_normal(h, Vec3(0, -5, 0));
  CHECK((below - Vec3(0, -1, 0)).norm() < 1e-9);

  // exact ties resolve to the smallest index
  Gaussian tie;
  tie.log_scales = Vec3::Zero();
  const Vec3 t = shortest_axis_normal(tie, Vec3(5, 0, 0));
  CHECK((t - Vec3(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("shortest_axis_normal: unit length, camera-facing, orthogonal to the other axes") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 50; ++i) {
    Gaussian g;
    g.position = Vec3(u(rng), u(rng), u(rng));
    g.rotation = spt::random_unit_quaternion(rng);
    g.log_scales = Vec3(std::log(0.5), std::log(0.9), std::log(0.05));
    const Vec3 camera(u(rng), u(rng), u(rng));
    const Vec3 n = shortest_axis_normal(g, camera);
    CHECK(std::abs(n.norm() - 1.0) < 1e-12);
    CHECK(n.dot(camera - g.position) >= 0.0);
    const Mat3 R = rotation_matrix(g.rotation);
    CHECK(std::abs(n.dot(R.col(0))) < 1e-9);
    CHECK(std::abs(n.dot(R.col(1))) < 1e-9);
  }
}

TEST_CASE("quaternion negation leaves covariance and normal unchanged") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    Gaussian g;
    g.rotation = spt::random_unit_quaternion(rng);
    g.log_scales = Vec3(std::log(0.3), std::log(0.7), std::log(0.1));
    Gaussian neg = g;
    neg.rotation = -g.rotation;
    CHECK((covariance(g) - covariance(neg)).norm() < 1e-12);
    const Vec3 cam(1.0, 2.0, 3.0);
    CHECK((shortest_axis_normal(g, cam) - shortest_axis_normal(neg, cam)).norm() < 1e-12);
  }
}

TEST_CASE("quaternion_from_rotation inverts rotation_matrix") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 30; ++i) {
    const Vec4 q = spt::random_unit_quaternion(rng);
    const Mat3 R = rotation_matrix(q);
    const Mat3 back = rotation_matrix(quaternion_from_rotation(R));
    CHECK((R - back).norm() < 1e-9);
  }
}

TEST_CASE("PLY round-trip preserves the cloud to float precision") {
  std::mt19937_64 rng(29);
  const Intrinsics K = spt::random_intrinsics(rng);
  GaussianCloud cloud = spt::random_cloud(rng, K, Pose{}, 17);

  const auto path = std::filesystem::temp_directory_path() / "splatprop_test_cloud.ply";
  save_ply(path, cloud);
  const GaussianCloud loaded = load_ply(path);
  std::filesystem::remove(path);

  REQUIRE(loaded.size() == cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    CHECK((loaded.positions[i] - cloud.positions[i]).norm() < 1e-5);
    CHECK((loaded.log_scales[i] - cloud.log_scales[i]).norm() < 1e-5);
    CHECK((loaded.rotations[i] - cloud.rotations[i]).norm() < 1e-5);
    CHECK(loaded.opacities_raw[i] == doctest::Approx(cloud.opacities_raw[i]).epsilon(1e-5));
    CHECK((loaded.colors[i] - cloud.colors[i]).cwiseAbs().maxCoeff() < 1.0 / 255.0 + 1e-9);
  }
}
