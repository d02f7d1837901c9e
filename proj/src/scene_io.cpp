#include "splatprop/scene_io.hpp"

#include "splatprop/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace splatprop {

namespace {

using nlohmann::json;

[[noreturn]] void fail_line(const std::filesystem::path& path, size_t line_no,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::filesystem::path& path, size_t line_no, const std::string& tok) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail_line(path, line_no, "expected a number, got '" + tok + "'");
  }
}

std::string stem_of(const std::string& name) {
  return std::filesystem::path(name).stem().string();
}

}  // namespace

Scene load_colmap(const std::filesystem::path& dir) {
  Scene scene;

  // cameras.txt
  std::map<int, Intrinsics> cameras;
  {
    const auto path = dir / "cameras.txt";
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto toks = tokenize(line);
      if (toks.size() < 4) fail_line(path, line_no, "truncated camera line");
      const int cam_id = int(parse_double(path, line_no, toks[0]));
      const std::string& model = toks[1];
      Intrinsics K;
      K.width = int(parse_double(path, line_no, toks[2]));
      K.height = int(parse_double(path, line_no, toks[3]));
      if (model == "PINHOLE") {
        if (toks.size() != 8) fail_line(path, line_no, "PINHOLE expects 4 parameters");
        K.fx = parse_double(path, line_no, toks[4]);
        K.fy = parse_double(path, line_no, toks[5]);
        K.cx = parse_double(path, line_no, toks[6]);
        K.cy = parse_double(path, line_no, toks[7]);
      } else if (model == "SIMPLE_PINHOLE") {
        if (toks.size() != 7) fail_line(path, line_no, "SIMPLE_PINHOLE expects 3 parameters");
        K.fx = K.fy = parse_double(path, line_no, toks[4]);
        K.cx = parse_double(path, line_no, toks[5]);
        K.cy = parse_double(path, line_no, toks[6]);
      } else {
        fail_line(path, line_no, "unsupported camera model '" + model + "'");
      }
      cameras[cam_id] = K;
    }
  }

  // images.txt: pose line + 2D-point line pairs
  {
    const auto path = dir / "images.txt";
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::string line;
    size_t line_no = 0;
    bool expect_points_line = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (!expect_points_line && (line.empty() || line[0] == '#')) continue;
      if (expect_points_line) {  // 2D observations, ignored
        expect_points_line = false;
        continue;
      }
      const auto toks = tokenize(line);
      if (toks.size() < 10) fail_line(path, line_no, "truncated image line");
      CameraView view;
      view.id = int(parse_double(path, line_no, toks[0]));
      const double qw = parse_double(path, line_no, toks[1]);
      const double qx = parse_double(path, line_no, toks[2]);
      const double qy = parse_double(path, line_no, toks[3]);
      const double qz = parse_double(path, line_no, toks[4]);
      view.pose.rotation = rotation_matrix(Vec4(qw, qx, qy, qz));
      view.pose.translation = Vec3(parse_double(path, line_no, toks[5]),
                                   parse_double(path, line_no, toks[6]),
                                   parse_double(path, line_no, toks[7]));
      const int cam_id = int(parse_double(path, line_no, toks[8]));
      view.name = toks[9];
      const auto it = cameras.find(cam_id);
      if (it == cameras.end())
        fail_line(path, line_no, "unknown camera id " + std::to_string(cam_id));
      view.intrinsics = it->second;
      scene.views.push_back(std::move(view));
      expect_points_line = true;
    }
  }
  std::sort(scene.views.begin(), scene.views.end(),
            [](const CameraView& a, const CameraView& b) { return a.id < b.id; });

  for (CameraView& view : scene.views) {
    const auto image_path = dir / "images" / view.name;
    if (std::filesystem::exists(image_path)) view.image = read_ppm(image_path);
    const auto depth_path = dir / "gt" / (stem_of(view.name) + "_depth.pfm");
    if (std::filesystem::exists(depth_path)) {
      view.gt_depth = read_pfm_gray(depth_path);
      view.gt_normal = read_pfm_color(dir / "gt" / (stem_of(view.name) + "_normal.pfm"));
      view.gt_valid = MaskImage(view.gt_depth.width, view.gt_depth.height, 0);
      for (size_t i = 0; i < view.gt_depth.data.size(); ++i)
        view.gt_valid.data[i] = view.gt_depth.data[i] > 0.0 ? 1 : 0;
    }
  }

  // points3D.txt
  {
    const auto path = dir / "points3D.txt";
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path.string() + ": cannot open");
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto toks = tokenize(line);
      if (toks.size() < 7) fail_line(path, line_no, "truncated point line");
      scene.points.emplace_back(parse_double(path, line_no, toks[1]),
                                parse_double(path, line_no, toks[2]),
                                parse_double(path, line_no, toks[3]));
      scene.point_colors.emplace_back(parse_double(path, line_no, toks[4]) / 255.0,
                                      parse_double(path, line_no, toks[5]) / 255.0,
                                      parse_double(path, line_no, toks[6]) / 255.0);
    }
  }
  return scene;
}

void save_colmap(const Scene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  bool any_gt = false;
  for (const CameraView& v : scene.views) any_gt |= v.has_ground_truth();
  if (any_gt) std::filesystem::create_directories(dir / "gt");

  {
    std::ofstream out(dir / "cameras.txt");
    out << "# Camera list: CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]\n";
    out.precision(17);
    for (const CameraView& v : scene.views)
      out << v.id << " PINHOLE " << v.intrinsics.width << " " << v.intrinsics.height << " "
          << v.intrinsics.fx << " " << v.intrinsics.fy << " " << v.intrinsics.cx << " "
          << v.intrinsics.cy << "\n";
  }
  {
    std::ofstream out(dir / "images.txt");
    out << "# Image list: IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n";
    out.precision(17);
    for (const CameraView& v : scene.views) {
      const Vec4 q = quaternion_from_rotation(v.pose.rotation);
      out << v.id << " " << q[0] << " " << q[1] << " " << q[2] << " " << q[3] << " "
          << v.pose.translation.x() << " " << v.pose.translation.y() << " "
          << v.pose.translation.z() << " " << v.id << " " << v.name << "\n";
      out << "\n";  // no 2D observations
    }
  }
  {
    std::ofstream out(dir / "points3D.txt");
    out << "# 3D point list: POINT3D_ID X Y Z R G B ERROR TRACK[]\n";
    out.precision(17);
    for (size_t i = 0; i < scene.points.size(); ++i) {
      const Vec3& p = scene.points[i];
      const Vec3 c = scene.point_colors[i] * 255.0;
      out << i + 1 << " " << p.x() << " " << p.y() << " " << p.z() << " "
          << int(std::lround(std::clamp(c.x(), 0.0, 255.0))) << " "
          << int(std::lround(std::clamp(c.y(), 0.0, 255.0))) << " "
          << int(std::lround(std::clamp(c.z(), 0.0, 255.0))) << " 0\n";
    }
  }
  for (const CameraView& v : scene.views) {
    if (!v.image.empty()) write_ppm(dir / "images" / v.name, v.image);
    if (v.has_ground_truth()) {
      write_pfm(dir / "gt" / (stem_of(v.name) + "_depth.pfm"), v.gt_depth);
      write_pfm(dir / "gt" / (stem_of(v.name) + "_normal.pfm"), v.gt_normal);
    }
  }
}

GaussianCloud init_cloud_from_points(const std::vector<Vec3>& points,
                                     const std::vector<Vec3>& colors, double extent) {
  if (points.empty()) throw std::invalid_argument("init_cloud_from_points: empty point set");
  if (extent <= 0.0) extent = 1.0;

  GaussianCloud cloud;
  cloud.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    double scale;
    if (points.size() == 1) {
      scale = 0.1 * extent;
    } else {
      std::array<double, 3> nearest = {std::numeric_limits<double>::infinity(),
                                       std::numeric_limits<double>::infinity(),
                                       std::numeric_limits<double>::infinity()};
      for (size_t j = 0; j < points.size(); ++j) {
        if (j == i) continue;
        const double d = (points[j] - points[i]).norm();
        if (d < nearest[2]) {
          nearest[2] = d;
          if (nearest[2] < nearest[1]) std::swap(nearest[1], nearest[2]);
          if (nearest[1] < nearest[0]) std::swap(nearest[0], nearest[1]);
        }
      }
      double sum = 0.0;
      int used = 0;
      for (const double d : nearest) {
        if (std::isinf(d)) break;
        sum += d;
        ++used;
      }
      scale = std::max(sum / used, 1e-7);
    }
    Gaussian g;
    g.position = points[i];
    g.color = colors[i];
    g.opacity_raw = logit(0.1);
    g.log_scales = Vec3::Constant(std::log(scale));
    cloud.append(g);
  }
  return cloud;
}

double scene_extent(const std::vector<CameraView>& views, const std::vector<Vec3>& points) {
  if (views.size() >= 2) {
    Vec3 center = Vec3::Zero();
    for (const CameraView& v : views) center += v.pose.center();
    center /= double(views.size());
    double radius = 0.0;
    for (const CameraView& v : views)
      radius = std::max(radius, (v.pose.center() - center).norm());
    if (radius > 0.0) return 1.1 * radius;
  }
  if (points.size() >= 2) {
    Vec3 center = Vec3::Zero();
    for (const Vec3& p : points) center += p;
    center /= double(points.size());
    double radius = 0.0;
    for (const Vec3& p : points) radius = std::max(radius, (p - center).norm());
    if (radius > 0.0) return radius;
  }
  return 1.0;
}

// --- synthetic scenes -------------------------------------------------------

namespace {

double hash01(int64_t x, int64_t y, uint64_t seed) {
  uint64_t h = seed + 0x9E3779B97F4A7C15ULL;
  h ^= uint64_t(x) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 30)) * 0x94D049BB133111EBULL;
  h ^= uint64_t(y) * 0xC2B2AE3D27D4EB4FULL;
  h = (h ^ (h >> 27)) * 0x2545F4914F6CDD1DULL;
  h ^= h >> 31;
  return double(h >> 11) * (1.0 / 9007199254740992.0);
}

double value_noise(double u, double v, uint64_t seed) {
  double total = 0.0, weight = 0.0, freq = 1.0, amp = 1.0;
  for (int octave = 0; octave < 3; ++octave) {
    const double uu = u * freq, vv = v * freq;
    const auto iu = int64_t(std::floor(uu)), iv = int64_t(std::floor(vv));
    const double fu = uu - double(iu), fv = vv - double(iv);
    const double su = fu * fu * (3.0 - 2.0 * fu);
    const double sv = fv * fv * (3.0 - 2.0 * fv);
    const uint64_t s = seed + uint64_t(octave) * 7919;
    const double n00 = hash01(iu, iv, s), n10 = hash01(iu + 1, iv, s);
    const double n01 = hash01(iu, iv + 1, s), n11 = hash01(iu + 1, iv + 1, s);
    const double val = (1 - su) * (1 - sv) * n00 + su * (1 - sv) * n10 + (1 - su) * sv * n01 +
                       su * sv * n11;
    total += amp * val;
    weight += amp;
    freq *= 2.0;
    amp *= 0.5;
  }
  return total / weight;
}

// In-plane orthonormal axes for texture coordinates.
void plane_axes(const Vec3& n, Vec3* e1, Vec3* e2) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  *e1 = n.cross(helper).normalized();
  *e2 = n.cross(*e1);
}

Vec3 texture_color(const ScenePlane& plane, const Vec3& x_world) {
  const PlaneTexture& tex = plane.texture;
  if (tex.type == PlaneTexture::Type::Flat) return tex.base_color;
  Vec3 e1, e2;
  plane_axes(plane.normal.normalized(), &e1, &e2);
  const double u = e1.dot(x_world) / tex.scale;
  const double v = e2.dot(x_world) / tex.scale;
  if (tex.type == PlaneTexture::Type::Checker) {
    const auto iu = int64_t(std::floor(u)), iv = int64_t(std::floor(v));
    return ((iu + iv) & 1) == 0 ? tex.base_color : tex.alt_color;
  }
  const double noise = value_noise(u, v, tex.seed);
  const double factor = 1.0 + tex.amplitude * (noise - 0.5) * 2.0;
  return (tex.base_color * factor).cwiseMax(0.0).cwiseMin(1.0);
}

struct RayHit {
  double t = std::numeric_limits<double>::infinity();
  int plane = -1;
};

RayHit cast_ray(const SyntheticSceneSpec& spec, const Vec3& origin, const Vec3& dir) {
  RayHit hit;
  for (size_t i = 0; i < spec.planes.size(); ++i) {
    const Vec3 n = spec.planes[i].normal.normalized();
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = (spec.planes[i].d - n.dot(origin)) / denom;
    if (t > 1e-4 && t < hit.t) {
      hit.t = t;
      hit.plane = int(i);
    }
  }
  return hit;
}

double local_contrast(const GrayImage& gray, int x, int y) {
  double sum = 0.0, sum2 = 0.0;
  int n = 0;
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) {
      if (!gray.inside(x + dx, y + dy)) continue;
      const double v = gray.at(x + dx, y + dy);
      sum += v;
      sum2 += v * v;
      ++n;
    }
  if (n < 2) return 0.0;
  const double mean = sum / n;
  return std::sqrt(std::max(0.0, sum2 / n - mean * mean));
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (planes.empty()) throw std::invalid_argument("scene spec: at least one plane required");
  if (cameras.count < 2) throw std::invalid_argument("scene spec: at least two cameras required");
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene spec: bad image size");
}

Scene generate_synthetic(const SyntheticSceneSpec& spec) {
  spec.validate();
  Scene scene;

  Intrinsics K;
  K.width = spec.width;
  K.height = spec.height;
  K.fx = K.fy = 0.5 * spec.width / std::tan(0.5 * spec.fov_deg * std::numbers::pi / 180.0);
  K.cx = 0.5 * (spec.width - 1);
  K.cy = 0.5 * (spec.height - 1);

  for (int i = 0; i < spec.cameras.count; ++i) {
    const double t = spec.cameras.count == 1 ? 0.5 : double(i) / (spec.cameras.count - 1);
    const double azimuth = (spec.cameras.azimuth_start_deg +
                            t * (spec.cameras.azimuth_end_deg - spec.cameras.azimuth_start_deg)) *
                           std::numbers::pi / 180.0;
    const Vec3 eye = spec.cameras.target + Vec3(spec.cameras.radius * std::cos(azimuth),
                                                spec.cameras.radius * std::sin(azimuth),
                                                spec.cameras.height);
    CameraView view;
    view.id = i + 1;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d.ppm", i);
    view.name = buf;
    view.intrinsics = K;
    view.pose = look_at_pose(eye, spec.cameras.target, Vec3::UnitZ());
    view.image = ColorImage(spec.width, spec.height, Vec3::Zero());
    view.gt_depth = GrayImage(spec.width, spec.height, 0.0);
    view.gt_normal = ColorImage(spec.width, spec.height, Vec3::Zero());
    view.gt_valid = MaskImage(spec.width, spec.height, 0);

    const Vec3 origin = view.pose.center();
    size_t hits = 0;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const Vec3 dir_world = view.pose.rotation.transpose() * K.pixel_ray(Vec2(x, y));
        const RayHit hit = cast_ray(spec, origin, dir_world);
        if (hit.plane < 0) continue;
        ++hits;
        // 2x2 supersampled color keeps distant texture consistent between
        // views; geometry stays point-sampled at the pixel center (exact).
        Vec3 color = Vec3::Zero();
        int samples = 0;
        for (const double oy : {-0.25, 0.25}) {
          for (const double ox : {-0.25, 0.25}) {
            const Vec3 dir = view.pose.rotation.transpose() * K.pixel_ray(Vec2(x + ox, y + oy));
            const RayHit sub = cast_ray(spec, origin, dir);
            if (sub.plane < 0) continue;
            color += texture_color(spec.planes[sub.plane], origin + sub.t * dir);
            ++samples;
          }
        }
        view.image.at(x, y) =
            samples > 0 ? Vec3(color / samples)
                        : texture_color(spec.planes[hit.plane], origin + hit.t * dir_world);
        view.gt_depth.at(x, y) = hit.t;  // camera-frame depth (ray has z = 1)
        Vec3 n_cam = view.pose.rotation * spec.planes[hit.plane].normal.normalized();
        if (n_cam.dot(K.pixel_ray(Vec2(x, y))) > 0.0) n_cam = -n_cam;  // face the camera
        view.gt_normal.at(x, y) = n_cam;
        view.gt_valid.at(x, y) = 1;
      }
    }
    if (hits == 0)
      throw std::runtime_error("synthetic scene: view " + std::to_string(view.id) +
                               " sees no surface");

    if (spec.noise_stddev > 0.0) {
      std::mt19937_64 noise_rng(spec.seed * 7919 + uint64_t(view.id));
      std::normal_distribution<double> noise(0.0, spec.noise_stddev);
      for (Vec3& c : view.image.data) {
        c += Vec3(noise(noise_rng), noise(noise_rng), noise(noise_rng));
        c = c.cwiseMax(0.0).cwiseMin(1.0);
      }
    }
    scene.views.push_back(std::move(view));
  }

  // SfM-like sparse points: random surface samples, kept only where the image
  // has local texture contrast (featureless regions yield no points).
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> view_dist(0, int(scene.views.size()) - 1);
  std::uniform_real_distribution<double> ux(0.0, double(spec.width - 1));
  std::uniform_real_distribution<double> uy(0.0, double(spec.height - 1));
  std::vector<GrayImage> lumas;
  lumas.reserve(scene.views.size());
  for (const CameraView& v : scene.views) lumas.push_back(luma(v.image));

  const int max_attempts = spec.init_points.count * 200;
  int attempts = 0;
  while (int(scene.points.size()) < spec.init_points.count && attempts++ < max_attempts) {
    const int vi = view_dist(rng);
    const CameraView& view = scene.views[vi];
    const int px = int(std::lround(ux(rng)));
    const int py = int(std::lround(uy(rng)));
    if (!view.gt_valid.at(px, py)) continue;
    if (spec.init_points.min_contrast > 0.0 &&
        local_contrast(lumas[vi], px, py) < spec.init_points.min_contrast)
      continue;
    scene.points.push_back(
        backproject(view.intrinsics, Vec2(px, py), view.gt_depth.at(px, py), view.pose));
    scene.point_colors.push_back(view.image.at(px, py));
  }
  return scene;
}

// --- JSON spec --------------------------------------------------------------

namespace {

Vec3 vec3_from_json(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

PlaneTexture texture_from_json(const json& j) {
  PlaneTexture tex;
  const std::string type = j.value("type", "value-noise");
  if (type == "checker")
    tex.type = PlaneTexture::Type::Checker;
  else if (type == "value-noise")
    tex.type = PlaneTexture::Type::ValueNoise;
  else if (type == "flat")
    tex.type = PlaneTexture::Type::Flat;
  else
    throw std::invalid_argument("scene spec: unknown texture type '" + type + "'");
  tex.seed = j.value("seed", 0);
  tex.scale = j.value("scale", 1.0);
  if (j.contains("base_color")) tex.base_color = vec3_from_json(j.at("base_color"));
  if (j.contains("alt_color")) tex.alt_color = vec3_from_json(j.at("alt_color"));
  tex.amplitude = j.value("amplitude", 0.5);
  return tex;
}

}  // namespace

SyntheticSceneSpec parse_scene_spec(const std::string& json_text) {
  const json j = json::parse(json_text);
  SyntheticSceneSpec spec;
  spec.seed = j.value("seed", 1);
  if (j.contains("image")) {
    spec.width = j.at("image").value("width", 128);
    spec.height = j.at("image").value("height", 96);
  }
  spec.fov_deg = j.value("fov_deg", 60.0);
  spec.noise_stddev = j.value("noise_stddev", 0.0);
  for (const json& jp : j.at("planes")) {
    ScenePlane plane;
    plane.normal = vec3_from_json(jp.at("normal"));
    plane.d = jp.at("d");
    if (jp.contains("texture")) plane.texture = texture_from_json(jp.at("texture"));
    spec.planes.push_back(plane);
  }
  if (j.contains("cameras")) {
    const json& jc = j.at("cameras");
    spec.cameras.count = jc.value("count", 8);
    spec.cameras.radius = jc.value("radius", 6.0);
    spec.cameras.height = jc.value("height", 3.0);
    if (jc.contains("target")) spec.cameras.target = vec3_from_json(jc.at("target"));
    spec.cameras.azimuth_start_deg = jc.value("azimuth_start_deg", -60.0);
    spec.cameras.azimuth_end_deg = jc.value("azimuth_end_deg", 60.0);
  }
  if (j.contains("init_points")) {
    spec.init_points.count = j.at("init_points").value("count", 200);
    spec.init_points.min_contrast = j.at("init_points").value("min_contrast", 0.0);
  }
  spec.validate();
  return spec;
}

std::string scene_spec_to_json(const SyntheticSceneSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["image"] = {{"width", spec.width}, {"height", spec.height}};
  j["fov_deg"] = spec.fov_deg;
  j["noise_stddev"] = spec.noise_stddev;
  j["planes"] = json::array();
  for (const ScenePlane& p : spec.planes) {
    json jp;
    jp["normal"] = {p.normal.x(), p.normal.y(), p.normal.z()};
    jp["d"] = p.d;
    json jt;
    switch (p.texture.type) {
      case PlaneTexture::Type::Checker: jt["type"] = "checker"; break;
      case PlaneTexture::Type::ValueNoise: jt["type"] = "value-noise"; break;
      case PlaneTexture::Type::Flat: jt["type"] = "flat"; break;
    }
    jt["seed"] = p.texture.seed;
    jt["scale"] = p.texture.scale;
    jt["base_color"] = {p.texture.base_color.x(), p.texture.base_color.y(),
                        p.texture.base_color.z()};
    jt["alt_color"] = {p.texture.alt_color.x(), p.texture.alt_color.y(), p.texture.alt_color.z()};
    jt["amplitude"] = p.texture.amplitude;
    jp["texture"] = jt;
    j["planes"].push_back(jp);
  }
  j["cameras"] = {{"count", spec.cameras.count},
                  {"radius", spec.cameras.radius},
                  {"height", spec.cameras.height},
                  {"target", {spec.cameras.target.x(), spec.cameras.target.y(),
                              spec.cameras.target.z()}},
                  {"azimuth_start_deg", spec.cameras.azimuth_start_deg},
                  {"azimuth_end_deg", spec.cameras.azimuth_end_deg}};
  j["init_points"] = {{"count", spec.init_points.count},
                      {"min_contrast", spec.init_points.min_contrast}};
  return j.dump(2);
}

}  // namespace splatprop
