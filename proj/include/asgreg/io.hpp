#pragma once

// File formats: ASCII PLY / OBJ meshes, PGM images, a plain-text float raster
// format and key-value documents for cameras and configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "asgreg/types.hpp"

namespace asgreg::io {

namespace internal {

inline std::ifstream OpenIn(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream OpenOut(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  return out;
}

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool EndsWith(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(), ::tolower);
  return tail == suffix;
}

}  // namespace internal

////////////////////////////////////////////////////////////////////////////////
// Meshes
////////////////////////////////////////////////////////////////////////////////

inline TriangleMesh ReadPly(const std::string& path) {
  auto in = internal::OpenIn(path);
  std::string line;
  std::getline(in, line);
  if (internal::Trim(line) != "ply") throw IoError(path + ": not a PLY file");

  size_t n_vertices = 0;
  size_t n_faces = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  while (std::getline(in, line)) {
    std::istringstream ss(internal::Trim(line));
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw IoError(path + ": only ASCII PLY is supported");
    } else if (tok == "element") {
      size_t count = 0;
      ss >> current >> count;
      if (current == "vertex") n_vertices = count;
      if (current == "face") n_faces = count;
    } else if (tok == "property" && current == "vertex") {
      std::string type, name;
      ss >> type >> name;
      vertex_props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  const auto find = [&](const std::string& name) {
    const auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    if (it == vertex_props.end()) throw IoError(path + ": vertex property '" + name + "' missing");
    return static_cast<size_t>(it - vertex_props.begin());
  };
  const size_t ix = find("x"), iy = find("y"), iz = find("z");

  std::vector<Vec3> vertices;
  vertices.reserve(n_vertices);
  for (size_t v = 0; v < n_vertices; ++v) {
    if (!std::getline(in, line)) throw IoError(path + ": truncated vertex list");
    std::istringstream ss(line);
    std::vector<double> vals(vertex_props.size());
    for (double& x : vals) {
      if (!(ss >> x)) throw IoError(path + ": malformed vertex line");
    }
    vertices.emplace_back(vals[ix], vals[iy], vals[iz]);
  }
  std::vector<TriangleMesh::Face> faces;
  faces.reserve(n_faces);
  for (size_t f = 0; f < n_faces; ++f) {
    if (!std::getline(in, line)) throw IoError(path + ": truncated face list");
    std::istringstream ss(line);
    int count = 0;
    ss >> count;
    if (count != 3) {
      throw IoError(path + ": face " + std::to_string(f) + " has " + std::to_string(count) +
                    " vertices; only triangles are supported");
    }
    TriangleMesh::Face face;
    if (!(ss >> face[0] >> face[1] >> face[2])) throw IoError(path + ": malformed face line");
    faces.push_back(face);
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

inline TriangleMesh ReadObj(const std::string& path) {
  auto in = internal::OpenIn(path);
  std::vector<Vec3> vertices;
  std::vector<TriangleMesh::Face> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(internal::Trim(line));
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw IoError(path + ": malformed vertex on line " + std::to_string(lineno));
      vertices.emplace_back(x, y, z);
    } else if (tok == "f") {
      std::vector<int> idx;
      std::string ref;
      while (ss >> ref) {
        const int i = std::stoi(ref.substr(0, ref.find('/')));
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(vertices.size()) + i);
      }
      if (idx.size() != 3) {
        throw IoError(path + ": face on line " + std::to_string(lineno) + " has " +
                      std::to_string(idx.size()) + " vertices; only triangles are supported");
      }
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(faces));
}

inline TriangleMesh ReadMesh(const std::string& path) {
  if (internal::EndsWith(path, ".ply")) return ReadPly(path);
  if (internal::EndsWith(path, ".obj")) return ReadObj(path);
  throw IoError(path + ": unknown mesh extension (expected .ply or .obj)");
}

inline void WritePly(const TriangleMesh& mesh, const std::string& path) {
  auto out = internal::OpenOut(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices().size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face "
      << mesh.NumFaces() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

inline void WriteObj(const TriangleMesh& mesh, const std::string& path) {
  auto out = internal::OpenOut(path);
  for (const auto& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

////////////////////////////////////////////////////////////////////////////////
// PGM
////////////////////////////////////////////////////////////////////////////////

// Reads binary (P5) or ASCII (P2) PGM with 8- or 16-bit samples. Values are
// returned in raw gray levels.
inline IntensityImage ReadPgm(const std::string& path) {
  auto in = internal::OpenIn(path, true);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw IoError(path + ": not a PGM file");
  auto next_int = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return std::stoi(tok);
    }
    throw IoError(path + ": truncated PGM header");
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw IoError(path + ": bad PGM header");
  IntensityImage img(w, h);
  if (magic == "P2") {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) img(x, y) = next_int();
    }
    return img;
  }
  in.get();  // single whitespace after the header
  const bool wide = maxval > 255;
  std::vector<unsigned char> buf(static_cast<size_t>(w) * h * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw IoError(path + ": truncated PGM data");
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      img(x, y) = wide ? (buf[2 * i] << 8 | buf[2 * i + 1]) : buf[i];
    }
  }
  return img;
}

// Writes gray levels clamped to [0, maxval] (8-bit for maxval <= 255).
inline void WritePgm(const Raster<double>& img, const std::string& path, int maxval = 255) {
  auto out = internal::OpenOut(path, true);
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = static_cast<unsigned>(std::lround(std::clamp(img(x, y), 0.0, double(maxval))));
      if (wide) out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    }
  }
}

// Scales valid values so the maximum maps to 255.
inline void WriteNormalizedPgm(const Raster<double>& img, const std::string& path) {
  double mx = 0.0;
  for (size_t i = 0; i < img.size(); ++i) {
    if (img.valid(i)) mx = std::max(mx, img.values()[i]);
  }
  Raster<double> scaled(img.width(), img.height(), 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.valid(x, y) && mx > 0) scaled(x, y) = 255.0 * img(x, y) / mx;
    }
  }
  WritePgm(scaled, path);
}

// Per-channel (n + 1) / 2 byte mapping, written as three side-by-side gray
// panels (x, y, z).
inline void WriteNormalMapPgm(const NormalMap& normals, const std::string& path) {
  const int w = normals.width();
  Raster<double> panel(3 * w, normals.height(), 0.0);
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      if (!normals.valid(x, y)) continue;
      for (int c = 0; c < 3; ++c) panel(c * w + x, y) = 255.0 * (normals(x, y)(c) + 1.0) / 2.0;
    }
  }
  WritePgm(panel, path);
}

////////////////////////////////////////////////////////////////////////////////
// Plain-text rasters
////////////////////////////////////////////////////////////////////////////////

// Header line "width height" (or "width height channels" for more than one
// channel), then row-major values, `channels` per pixel; "nan" marks an
// invalid pixel.
struct TextRaster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> values;  // NaN where invalid

  double at(int x, int y, int c = 0) const {
    return values[(static_cast<size_t>(y) * width + x) * channels + c];
  }
};

inline TextRaster ReadTextRaster(const std::string& path) {
  auto in = internal::OpenIn(path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  TextRaster r;
  if (!(hs >> r.width >> r.height)) throw IoError(path + ": bad raster header");
  if (!(hs >> r.channels)) r.channels = 1;
  if (r.width < 0 || r.height < 0 || r.channels < 1) throw IoError(path + ": bad raster header");
  const size_t n = static_cast<size_t>(r.width) * r.height * r.channels;
  r.values.resize(n);
  std::string tok;
  for (size_t i = 0; i < n; ++i) {
    if (!(in >> tok)) throw IoError(path + ": truncated raster data");
    std::string lower = tok;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    r.values[i] = lower == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(tok);
  }
  return r;
}

inline void WriteTextRaster(const TextRaster& r, const std::string& path) {
  auto out = internal::OpenOut(path);
  out << r.width << ' ' << r.height;
  if (r.channels != 1) out << ' ' << r.channels;
  out << '\n';
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      for (int c = 0; c < r.channels; ++c) {
        const double v = r.at(x, y, c);
        if (x + c > 0) out << ' ';
        if (std::isnan(v)) {
          out << "nan";
        } else {
          out << v;
        }
      }
    }
    out << '\n';
  }
}

template <typename RasterT>
TextRaster ToTextRaster(const RasterT& r) {
  TextRaster t{r.width(), r.height(), 1, {}};
  t.values.resize(r.size());
  for (size_t i = 0; i < r.size(); ++i) {
    t.values[i] = r.valid(i) ? static_cast<double>(r.values()[i])
                             : std::numeric_limits<double>::quiet_NaN();
  }
  return t;
}

inline TextRaster ToTextRaster(const NormalMap& n) {
  TextRaster t{n.width(), n.height(), 3, {}};
  t.values.resize(n.size() * 3, std::numeric_limits<double>::quiet_NaN());
  for (size_t i = 0; i < n.size(); ++i) {
    if (!n.valid(i)) continue;
    for (int c = 0; c < 3; ++c) t.values[i * 3 + c] = n.values()[i](c);
  }
  return t;
}

inline DepthMap ReadDepthMap(const std::string& path) {
  const TextRaster t = ReadTextRaster(path);
  if (t.channels != 1) throw IoError(path + ": depth raster must have one channel");
  DepthMap d(t.width, t.height, 0.0);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const double v = t.at(x, y);
      if (std::isfinite(v) && v > 0) d.Set(x, y, v);
    }
  }
  return d;
}

inline GradientImage ReadGradientImage(const std::string& path) {
  const TextRaster t = ReadTextRaster(path);
  if (t.channels != 1) throw IoError(path + ": gradient raster must have one channel");
  GradientImage g(t.width, t.height, 0.0);
  for (int y = 0; y < t.height; ++y) {
    for (int x = 0; x < t.width; ++x) {
      const double v = t.at(x, y);
      if (std::isfinite(v)) g.Set(x, y, v);
    }
  }
  g.Validate();
  return g;
}

////////////////////////////////////////////////////////////////////////////////
// Key-value documents
////////////////////////////////////////////////////////////////////////////////

// Lines of "key = value"; '#' starts a comment. Keys may carry a section
// prefix such as "flow.iterations".
class KeyValueDocument {
 public:
  static KeyValueDocument Parse(std::istream& in, const std::string& origin = "<stream>") {
    KeyValueDocument doc;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = internal::Trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw IoError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      doc.Set(internal::Trim(line.substr(0, eq)), internal::Trim(line.substr(eq + 1)));
    }
    return doc;
  }

  static KeyValueDocument Load(const std::string& path) {
    auto in = internal::OpenIn(path);
    return Parse(in, path);
  }

  void Save(const std::string& path) const {
    auto out = internal::OpenOut(path);
    for (const auto& key : order_) out << key << " = " << values_.at(key) << '\n';
  }

  void Set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }
  template <typename T>
  void SetNumber(const std::string& key, T value) {
    std::ostringstream ss;
    ss << std::setprecision(17) << value;
    Set(key, ss.str());
  }
  void SetNumbers(const std::string& key, const std::vector<double>& values) {
    std::ostringstream ss;
    ss << std::setprecision(17);
    for (size_t i = 0; i < values.size(); ++i) ss << (i ? " " : "") << values[i];
    Set(key, ss.str());
  }

  bool Has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& Get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw IoError("missing key '" + key + "'");
    return it->second;
  }

  double GetDouble(const std::string& key) const {
    try {
      return std::stod(Get(key));
    } catch (const std::invalid_argument&) {
      throw IoError("key '" + key + "' is not a number");
    }
  }
  int GetInt(const std::string& key) const { return static_cast<int>(std::lround(GetDouble(key))); }

  std::vector<double> GetNumbers(const std::string& key, size_t expected) const {
    std::istringstream ss(Get(key));
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    if (out.size() != expected) {
      throw IoError("key '" + key + "' expects " + std::to_string(expected) + " numbers");
    }
    return out;
  }

  const std::vector<std::string>& keys() const { return order_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

inline void PutPose(KeyValueDocument& doc, const CameraPose& pose) {
  std::vector<double> r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r.push_back(pose.rotation()(i, j));
  }
  doc.SetNumbers("rotation", r);
  doc.SetNumbers("translation", {pose.translation().x(), pose.translation().y(),
                                 pose.translation().z()});
}

inline void PutIntrinsics(KeyValueDocument& doc, const CameraIntrinsics& k) {
  doc.SetNumber("fx", k.fx);
  doc.SetNumber("fy", k.fy);
  doc.SetNumber("cx", k.cx);
  doc.SetNumber("cy", k.cy);
  doc.SetNumber("skew", k.skew);
  doc.SetNumber("width", k.width);
  doc.SetNumber("height", k.height);
}

inline CameraPose GetPose(const KeyValueDocument& doc) {
  const auto r = doc.GetNumbers("rotation", 9);
  const auto t = doc.GetNumbers("translation", 3);
  Mat3 rot;
  rot << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  return CameraPose::FromApproximateRotation(rot, Vec3(t[0], t[1], t[2]));
}

inline CameraIntrinsics GetIntrinsics(const KeyValueDocument& doc) {
  return CameraIntrinsics::Create(doc.GetDouble("fx"), doc.GetDouble("fy"),
                                  doc.GetDouble("cx"), doc.GetDouble("cy"),
                                  doc.GetInt("width"), doc.GetInt("height"),
                                  doc.Has("skew") ? doc.GetDouble("skew") : 0.0);
}

inline void WritePose(const CameraPose& pose, const std::string& path) {
  KeyValueDocument doc;
  PutPose(doc, pose);
  doc.Save(path);
}

inline void WriteIntrinsics(const CameraIntrinsics& k, const std::string& path) {
  KeyValueDocument doc;
  PutIntrinsics(doc, k);
  doc.Save(path);
}

inline CameraPose ReadPose(const std::string& path) { return GetPose(KeyValueDocument::Load(path)); }
inline CameraIntrinsics ReadIntrinsics(const std::string& path) {
  return GetIntrinsics(KeyValueDocument::Load(path));
}

}  // namespace asgreg::io
