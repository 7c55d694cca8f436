#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "npmvs/evaluation.hpp"
#include "npmvs/geometry.hpp"
#include "npmvs/grid.hpp"
#include "npmvs/pipeline.hpp"
#include "npmvs/scene.hpp"

namespace npmvs::io {

namespace fs = std::filesystem;

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

/// cam.txt: "extrinsic", 4x4 world-to-camera, "intrinsic", 3x3, then
/// "d_min d_interval [d_num [d_max]]".
struct CamFile {
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double depth_min = 0.0;
  double depth_interval = 0.0;
  std::optional<int> depth_count;
  std::optional<double> depth_max;

  /// depth_max when present, otherwise depth_min + (count - 1) * interval
  /// with count defaulting to 192.
  DepthRange range() const;
};

CamFile parse_cam(std::string_view text, const std::string& source_name = "cam.txt");
std::string format_cam(const CamFile& cam);
CamFile read_cam(const fs::path& path);
void write_cam(const fs::path& path, const CamFile& cam);

/// Single-channel PFM ("Pf"). Rows are stored bottom-to-top; a negative scale
/// marks little-endian data. NaN is an invalid pixel.
DepthMap parse_pfm(std::string_view bytes, const std::string& source_name = "pfm");
std::string format_pfm(const DepthMap& depth);
DepthMap read_pfm(const fs::path& path);
void write_pfm(const fs::path& path, const DepthMap& depth);

/// Binary 8-bit PGM (P5) or PPM (P6, converted to luma).
Image parse_pnm(std::string_view bytes, const std::string& source_name = "pnm");
std::string format_pgm(const Image& image);
Image read_image(const fs::path& path);
void write_pgm(const fs::path& path, const Image& image);

/// ASCII PLY with `x y z red green blue` vertices.
std::string format_ply(const PointCloud& cloud);
PointCloud parse_ply(std::string_view text, const std::string& source_name = "ply");
PointCloud read_ply(const fs::path& path);
void write_ply(const fs::path& path, const PointCloud& cloud);

/// Binary dump of one level's hypotheses and probabilities.
std::string format_level(const LevelOutput& level);
LevelOutput parse_level(std::string_view bytes, const std::string& source_name = "level");

std::string view_name(int index);

/// Scene directory layout:
///   images/<8 digits>.pgm, cams/<8 digits>_cam.txt, depths/<8 digits>.pfm (optional)
SceneBundle load_scene(const fs::path& directory);
void save_scene(const SceneBundle& scene, const fs::path& directory);

/// Inference output layout: depths/, cams/, images/ as above plus
/// levels/<8 digits>_l<level>.bin and config.json.
void save_inference(const SceneBundle& scene, std::span<const InferenceResult> results,
                    const PipelineConfig& config, const fs::path& directory);

}  // namespace npmvs::io
