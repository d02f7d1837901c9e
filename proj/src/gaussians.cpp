#include "splatprop/gaussians.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splatprop {

Mat3 rotation_matrix(const Vec4& quaternion) {
  const Vec4 q = quaternion.normalized();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Vec4 quaternion_from_rotation(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  Vec4 out(q.w(), q.x(), q.y(), q.z());
  if (out[0] < 0.0) out = -out;
  return out.normalized();
}

Mat3 covariance(const Gaussian& g) {
  const Mat3 R = rotation_matrix(g.rotation);
  const Vec3 s2 = g.scales().array().square();
  return R * s2.asDiagonal() * R.transpose();
}

double view_depth(const Gaussian& g, const Pose& pose) {
  return pose.to_camera(g.position).z();
}

Vec3 shortest_axis_normal(const Gaussian& g, const Vec3& camera_center) {
  const Vec3 s = g.scales();
  int r = 0;
  if (s[1] < s[r]) r = 1;
  if (s[2] < s[r]) r = 2;
  Vec3 n = rotation_matrix(g.rotation).col(r);
  if (n.dot(camera_center - g.position) < 0.0) n = -n;
  return n;
}

void GaussianCloud::append(const Gaussian& g) {
  positions.push_back(g.position);
  rotations.push_back(g.rotation);
  log_scales.push_back(g.log_scales);
  opacities_raw.push_back(g.opacity_raw);
  colors.push_back(g.color);
  grad2d_accum.push_back(0.0);
  seen_count.push_back(0);
}

void GaussianCloud::reserve(size_t n) {
  positions.reserve(n);
  rotations.reserve(n);
  log_scales.reserve(n);
  opacities_raw.reserve(n);
  colors.reserve(n);
  grad2d_accum.reserve(n);
  seen_count.reserve(n);
}

void GaussianCloud::compact(const std::vector<uint8_t>& keep) {
  size_t out = 0;
  for (size_t i = 0; i < size(); ++i) {
    if (!keep[i]) continue;
    positions[out] = positions[i];
    rotations[out] = rotations[i];
    log_scales[out] = log_scales[i];
    opacities_raw[out] = opacities_raw[i];
    colors[out] = colors[i];
    grad2d_accum[out] = grad2d_accum[i];
    seen_count[out] = seen_count[i];
    ++out;
  }
  positions.resize(out);
  rotations.resize(out);
  log_scales.resize(out);
  opacities_raw.resize(out);
  colors.resize(out);
  grad2d_accum.resize(out);
  seen_count.resize(out);
}

void GaussianCloud::reset_stats() {
  std::fill(grad2d_accum.begin(), grad2d_accum.end(), 0.0);
  std::fill(seen_count.begin(), seen_count.end(), 0);
}

bool GaussianCloud::consistent() const {
  const size_t n = positions.size();
  return rotations.size() == n && log_scales.size() == n && opacities_raw.size() == n &&
         colors.size() == n && grad2d_accum.size() == n && seen_count.size() == n;
}

namespace {

void put_float(std::ostream& out, float v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

float get_float(std::istream& in) {
  float v = 0.0f;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_ply(const std::filesystem::path& path, const GaussianCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz"})
    out << "property float " << name << "\n";
  for (const char* name : {"red", "green", "blue"}) out << "property uchar " << name << "\n";
  out << "property float opacity\n";
  for (int i = 0; i < 3; ++i) out << "property float scale_" << i << "\n";
  for (int i = 0; i < 4; ++i) out << "property float rot_" << i << "\n";
  out << "end_header\n";

  for (size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian g = cloud.get(i);
    const Vec3 s = g.scales();
    int r = 0;
    if (s[1] < s[r]) r = 1;
    if (s[2] < s[r]) r = 2;
    const Vec3 axis = rotation_matrix(g.rotation).col(r);
    for (int k = 0; k < 3; ++k) put_float(out, static_cast<float>(g.position[k]));
    for (int k = 0; k < 3; ++k) put_float(out, static_cast<float>(axis[k]));
    for (int k = 0; k < 3; ++k) {
      const double c = std::clamp(g.color[k], 0.0, 1.0);
      const uint8_t b = static_cast<uint8_t>(std::lround(c * 255.0));
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
    put_float(out, static_cast<float>(g.opacity_raw));
    for (int k = 0; k < 3; ++k) put_float(out, static_cast<float>(g.log_scales[k]));
    for (int k = 0; k < 4; ++k) put_float(out, static_cast<float>(g.rotation[k]));
  }
  if (!out) throw std::runtime_error(path.string() + ": short write");
}

GaussianCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");

  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw std::runtime_error(path.string() + ": not a PLY file");

  size_t count = 0;
  std::vector<std::pair<std::string, char>> props;  // name, type ('f' or 'u')
  bool binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = (fmt == "binary_little_endian");
    } else if (word == "element") {
      std::string kind;
      ls >> kind >> count;
      if (kind != "vertex") throw std::runtime_error(path.string() + ": unsupported element " + kind);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      if (type == "float")
        props.emplace_back(name, 'f');
      else if (type == "uchar")
        props.emplace_back(name, 'u');
      else
        throw std::runtime_error(path.string() + ": unsupported property type " + type);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!binary_le) throw std::runtime_error(path.string() + ": expected binary_little_endian");

  GaussianCloud cloud;
  cloud.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Gaussian g;
    for (const auto& [name, type] : props) {
      double value = 0.0;
      if (type == 'f') {
        value = get_float(in);
      } else {
        uint8_t b = 0;
        in.read(reinterpret_cast<char*>(&b), 1);
        value = b / 255.0;
      }
      if (name == "x") g.position.x() = value;
      else if (name == "y") g.position.y() = value;
      else if (name == "z") g.position.z() = value;
      else if (name == "red") g.color.x() = value;
      else if (name == "green") g.color.y() = value;
      else if (name == "blue") g.color.z() = value;
      else if (name == "opacity") g.opacity_raw = value;
      else if (name == "scale_0") g.log_scales[0] = value;
      else if (name == "scale_1") g.log_scales[1] = value;
      else if (name == "scale_2") g.log_scales[2] = value;
      else if (name == "rot_0") g.rotation[0] = value;
      else if (name == "rot_1") g.rotation[1] = value;
      else if (name == "rot_2") g.rotation[2] = value;
      else if (name == "rot_3") g.rotation[3] = value;
      // nx,ny,nz are derived on save and ignored on load
    }
    if (!in) throw std::runtime_error(path.string() + ": truncated vertex " + std::to_string(i));
    cloud.append(g);
  }
  return cloud;
}

}  // namespace splatprop
