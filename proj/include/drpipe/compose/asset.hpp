#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "drpipe/core/types.hpp"

namespace drpipe::compose {

struct MeshFace {
  std::array<std::uint32_t, 3> idx;  // 0-based
  core::Rgb color;
};

struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<MeshFace> faces;
};

// A substitute object. Vertices are in meters in an asset-local frame.
class Asset {
 public:
  Asset(std::string id, Mesh mesh);

  const std::string& id() const { return id_; }
  const Mesh& mesh() const { return mesh_; }
  const Eigen::Vector3d& local_extent() const { return extent_; }

 private:
  std::string id_;
  Mesh mesh_;
  Eigen::Vector3d extent_;
};

// Axis-aligned box centered at the origin, 12 triangles; face colors in order
// +x,-x,+y,-y,+z,-z.
Mesh make_box_mesh(const Eigen::Vector3d& extents, const std::array<core::Rgb, 6>& face_colors);
Mesh make_pyramid_mesh(const Eigen::Vector3d& extents);

Asset builtin_box_asset();
Asset builtin_pyramid_asset();

// Line-oriented mesh text: `v x y z`, `f i j k r g b` (1-based), `#` comments.
Asset parse_asset_text(std::string id, std::string_view text);
Asset load_asset_file(const std::filesystem::path& path);
std::string format_asset_text(const Asset& asset);

// Read-only id -> asset map shared by sessions.
class AssetStore {
 public:
  AssetStore();  // built-ins only
  // Built-ins plus every `*.mesh` in dir, id = file stem.
  static AssetStore with_directory(const std::filesystem::path& dir);

  void add(Asset asset);
  const Asset* find(std::string_view id) const;
  const Asset& get(std::string_view id) const;  // throws UnknownAsset
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, std::shared_ptr<const Asset>, std::less<>> assets_;
};

}  // namespace drpipe::compose
