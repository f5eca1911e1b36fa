#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/mesh.hpp"

namespace hdhuman::io {

/// ASCII OBJ. A 3-channel "color" attribute is written as trailing vertex
/// values (the common "v x y z r g b" extension).
inline void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const VertexAttribute* color = nullptr;
  if (auto it = mesh.attributes.find("color"); it != mesh.attributes.end() && it->second.channels == 3)
    color = &it->second;
  char buf[160];
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    int n = std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g", v.x(), v.y(), v.z());
    out.write(buf, n);
    if (color) {
      n = std::snprintf(buf, sizeof(buf), " %.17g %.17g %.17g", color->at(i)[0], color->at(i)[1], color->at(i)[2]);
      out.write(buf, n);
    }
    out << '\n';
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

inline Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  Mesh mesh;
  std::vector<double> colors;
  bool has_color = true;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() < 2) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      if (!ls) throw Error(ErrorCode::kIo, "bad vertex line in " + path.string());
      mesh.vertices.push_back(v);
      double r, g, b;
      if (ls >> r >> g >> b) {
        colors.insert(colors.end(), {r, g, b});
      } else {
        has_color = false;
      }
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) {
        const long i = std::stol(tok.substr(0, tok.find('/')));
        const long resolved = i > 0 ? i - 1 : static_cast<long>(mesh.vertices.size()) + i;
        if (resolved < 0) throw Error(ErrorCode::kIo, "bad face index in " + path.string());
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  if (has_color && !mesh.vertices.empty()) mesh.set_attribute("color", 3, std::move(colors));
  mesh.validate();
  return mesh;
}

/// Binary little-endian PLY with double coordinates and optional uchar RGB
/// from a 3-channel "color" attribute in [0,1].
inline void write_ply(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const VertexAttribute* color = nullptr;
  if (auto it = mesh.attributes.find("color"); it != mesh.attributes.end() && it->second.channels == 3)
    color = &it->second;
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (color) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double xyz[3] = {mesh.vertices[i].x(), mesh.vertices[i].y(), mesh.vertices[i].z()};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    if (color) {
      std::uint8_t rgb[3];
      for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<std::uint8_t>(std::lround(std::clamp(color->at(i)[c], 0.0, 1.0) * 255.0));
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
  for (const auto& t : mesh.triangles) {
    const std::uint8_t n = 3;
    const std::int32_t idx[3] = {static_cast<std::int32_t>(t[0]), static_cast<std::int32_t>(t[1]),
                                 static_cast<std::int32_t>(t[2])};
    out.write(reinterpret_cast<const char*>(&n), 1);
    out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
  }
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

/// Reads the binary PLY layout produced by write_ply (float or double
/// coordinates, optional uchar RGB, triangle faces).
inline Mesh read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string line;
  std::size_t nv = 0, nf = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  bool binary_le = false;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (tag == "element") {
      ls >> current;
      if (current == "vertex") ls >> nv;
      if (current == "face") ls >> nf;
    } else if (tag == "property" && current == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vertex_props.push_back(type + ":" + name);
    }
  }
  if (!binary_le) throw Error(ErrorCode::kIo, "only binary little-endian PLY is supported: " + path.string());
  Mesh mesh;
  mesh.vertices.resize(nv);
  std::vector<double> colors;
  bool has_color = false;
  for (const auto& p : vertex_props)
    if (p == "uchar:red") has_color = true;
  for (std::size_t i = 0; i < nv; ++i) {
    int axis = 0;
    for (const auto& p : vertex_props) {
      const std::string type = p.substr(0, p.find(':'));
      double v = 0.0;
      if (type == "double") {
        in.read(reinterpret_cast<char*>(&v), 8);
      } else if (type == "float") {
        float f;
        in.read(reinterpret_cast<char*>(&f), 4);
        v = f;
      } else if (type == "uchar") {
        std::uint8_t b;
        in.read(reinterpret_cast<char*>(&b), 1);
        v = b / 255.0;
      } else {
        throw Error(ErrorCode::kIo, "unsupported PLY vertex property " + p);
      }
      if (axis < 3) {
        mesh.vertices[i][axis++] = v;
      } else {
        colors.push_back(v);
      }
    }
  }
  for (std::size_t f = 0; f < nf; ++f) {
    std::uint8_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 1);
    std::vector<std::int32_t> idx(n);
    in.read(reinterpret_cast<char*>(idx.data()), static_cast<std::streamsize>(n * sizeof(std::int32_t)));
    for (int k = 1; k + 1 < n; ++k)
      mesh.triangles.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                                static_cast<std::uint32_t>(idx[k + 1])});
  }
  if (!in) throw Error(ErrorCode::kIo, "truncated PLY " + path.string());
  if (has_color) mesh.set_attribute("color", 3, std::move(colors));
  mesh.validate();
  return mesh;
}

inline Mesh read_mesh(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".obj") return read_obj(path);
  if (ext == ".ply") return read_ply(path);
  throw Error(ErrorCode::kIo, "unknown mesh format: " + path.string());
}

inline void write_mesh(const std::filesystem::path& path, const Mesh& mesh) {
  const auto ext = path.extension().string();
  if (ext == ".obj") return write_obj(path, mesh);
  if (ext == ".ply") return write_ply(path, mesh);
  throw Error(ErrorCode::kIo, "unknown mesh format: " + path.string());
}

}  // namespace hdhuman::io
