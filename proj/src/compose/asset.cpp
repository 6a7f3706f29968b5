#include "drpipe/compose/asset.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>

#include "drpipe/core/error.hpp"
#include "drpipe/core/image_io.hpp"

namespace drpipe::compose {

Asset::Asset(std::string id, Mesh mesh) : id_(std::move(id)), mesh_(std::move(mesh)) {
  if (mesh_.faces.empty()) fail(ErrorCode::kAssetFormat, id_ + ": asset needs at least one triangle");
  for (const auto& f : mesh_.faces) {
    for (auto i : f.idx) {
      if (i >= mesh_.vertices.size()) fail(ErrorCode::kAssetFormat, id_ + ": vertex index out of range");
    }
  }
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& v : mesh_.vertices) {
    if (!v.allFinite()) fail(ErrorCode::kAssetFormat, id_ + ": non-finite vertex");
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  extent_ = hi - lo;
  if (!(extent_.minCoeff() > 0.0)) fail(ErrorCode::kAssetFormat, id_ + ": extent must be positive on every axis");
}

Mesh make_box_mesh(const Eigen::Vector3d& e, const std::array<core::Rgb, 6>& colors) {
  const Eigen::Vector3d h = e / 2.0;
  Mesh m;
  // Vertex i has x sign from bit 0, y from bit 1, z from bit 2.
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  }
  // Each face as a quad a,b,c,d; triangles (a,b,c) and (a,c,d).
  const std::array<std::array<std::uint32_t, 4>, 6> quads = {{
      {1, 3, 7, 5},  // +x
      {0, 4, 6, 2},  // -x
      {2, 6, 7, 3},  // +y
      {0, 1, 5, 4},  // -y
      {4, 5, 7, 6},  // +z
      {0, 2, 3, 1},  // -z
  }};
  for (std::size_t f = 0; f < 6; ++f) {
    const auto& q = quads[f];
    m.faces.push_back({{q[0], q[1], q[2]}, colors[f]});
    m.faces.push_back({{q[0], q[2], q[3]}, colors[f]});
  }
  return m;
}

Mesh make_pyramid_mesh(const Eigen::Vector3d& e) {
  const Eigen::Vector3d h = e / 2.0;
  Mesh m;
  // Square base in the y = +h.y plane, apex at y = -h.y.
  m.vertices = {{-h.x(), h.y(), -h.z()}, {h.x(), h.y(), -h.z()}, {h.x(), h.y(), h.z()},
                {-h.x(), h.y(), h.z()},  {0.0, -h.y(), 0.0}};
  const core::Rgb side_a{250, 150, 20};
  const core::Rgb side_b{130, 50, 170};
  const core::Rgb base{90, 90, 110};
  m.faces = {{{0, 1, 4}, side_a}, {{1, 2, 4}, side_b}, {{2, 3, 4}, side_a},
             {{3, 0, 4}, side_b}, {{0, 2, 1}, base},   {{0, 3, 2}, base}};
  return m;
}

Asset builtin_box_asset() {
  const std::array<core::Rgb, 6> colors = {{
      {250, 140, 0}, {120, 40, 160}, {0, 128, 128}, {255, 105, 180}, {160, 220, 60}, {240, 240, 240},
  }};
  return Asset("box", make_box_mesh({1.0, 1.0, 1.0}, colors));
}

Asset builtin_pyramid_asset() { return Asset("pyramid", make_pyramid_mesh({1.0, 1.0, 1.0})); }

namespace {

double parse_double(std::string_view tok, std::size_t line_no) {
  std::string s(tok);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    fail(ErrorCode::kAssetFormat, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  if (!std::isfinite(v)) {
    fail(ErrorCode::kAssetFormat, "line " + std::to_string(line_no) + ": non-finite value");
  }
  return v;
}

long parse_int(std::string_view tok, std::size_t line_no, long lo, long hi) {
  long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || v < lo || v > hi) {
    fail(ErrorCode::kAssetFormat,
         "line " + std::to_string(line_no) + ": bad integer '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

Asset parse_asset_text(std::string id, std::string_view text) {
  Mesh mesh;
  struct RawFace {
    long i, j, k;
    core::Rgb c;
    std::size_t line;
  };
  std::vector<RawFace> raw;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      fail(ErrorCode::kAssetFormat, "line " + std::to_string(line_no) + ": CR line ending");
    }
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() != 4) fail(ErrorCode::kAssetFormat, "line " + std::to_string(line_no) + ": v needs 3 values");
      mesh.vertices.emplace_back(parse_double(tok[1], line_no), parse_double(tok[2], line_no),
                                 parse_double(tok[3], line_no));
    } else if (tok[0] == "f") {
      if (tok.size() != 7) fail(ErrorCode::kAssetFormat, "line " + std::to_string(line_no) + ": f needs 6 values");
      RawFace f{};
      f.i = parse_int(tok[1], line_no, 1, 1L << 30);
      f.j = parse_int(tok[2], line_no, 1, 1L << 30);
      f.k = parse_int(tok[3], line_no, 1, 1L << 30);
      f.c = {std::uint8_t(parse_int(tok[4], line_no, 0, 255)), std::uint8_t(parse_int(tok[5], line_no, 0, 255)),
             std::uint8_t(parse_int(tok[6], line_no, 0, 255))};
      f.line = line_no;
      raw.push_back(f);
    } else {
      fail(ErrorCode::kAssetFormat,
           "line " + std::to_string(line_no) + ": unknown record '" + std::string(tok[0]) + "'");
    }
    if (nl == text.size()) break;
  }
  for (const auto& f : raw) {
    for (long idx : {f.i, f.j, f.k}) {
      if (std::size_t(idx) > mesh.vertices.size()) {
        fail(ErrorCode::kAssetFormat, "line " + std::to_string(f.line) + ": vertex index out of range");
      }
    }
    mesh.faces.push_back({{std::uint32_t(f.i - 1), std::uint32_t(f.j - 1), std::uint32_t(f.k - 1)}, f.c});
  }
  return Asset(std::move(id), std::move(mesh));
}

Asset load_asset_file(const std::filesystem::path& path) {
  const auto bytes = core::read_file(path);
  return parse_asset_text(path.stem().string(),
                          std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_asset_text(const Asset& asset) {
  std::ostringstream os;
  os.precision(17);
  os << "# asset " << asset.id() << "\n";
  for (const auto& v : asset.mesh().vertices) os << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& f : asset.mesh().faces) {
    os << "f " << f.idx[0] + 1 << " " << f.idx[1] + 1 << " " << f.idx[2] + 1 << " " << int(f.color.r)
       << " " << int(f.color.g) << " " << int(f.color.b) << "\n";
  }
  return os.str();
}

AssetStore::AssetStore() {
  add(builtin_box_asset());
  add(builtin_pyramid_asset());
}

AssetStore AssetStore::with_directory(const std::filesystem::path& dir) {
  AssetStore store;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::kIo, "asset dir not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mesh") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) store.add(load_asset_file(f));
  return store;
}

void AssetStore::add(Asset asset) {
  auto id = asset.id();
  assets_[id] = std::make_shared<const Asset>(std::move(asset));
}

const Asset* AssetStore::find(std::string_view id) const {
  auto it = assets_.find(id);
  return it == assets_.end() ? nullptr : it->second.get();
}

const Asset& AssetStore::get(std::string_view id) const {
  const Asset* a = find(id);
  if (!a) fail(ErrorCode::kUnknownAsset, "no asset '" + std::string(id) + "'");
  return *a;
}

std::vector<std::string> AssetStore::ids() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : assets_) out.push_back(k);
  return out;
}

}  // namespace drpipe::compose
