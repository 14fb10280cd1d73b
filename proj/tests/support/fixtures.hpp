#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tumorsynth/core/grid.hpp"
#include "tumorsynth/pipeline/config.hpp"

namespace tstest {

using namespace tumorsynth;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "tumorsynth");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

Geometry make_geometry(const Dims& dims, const Vec3& spacing = {1, 1, 1}, const Vec3& origin = {0, 0, 0});

// Voxels whose centre lies within `radius_mm` of `center_mm` (voxel-centre
// world coordinates with identity direction).
Mask3 ball_mask(const Geometry& g, const Vec3& center_mm, double radius_mm);
Mask3 box_mask(const Geometry& g, const Index3& lo, const Index3& hi_exclusive);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p);
std::uint64_t checksum(const std::filesystem::path& p);

// Every regular file under `root`, relative path -> checksum.
std::vector<std::pair<std::string, std::uint64_t>> tree_checksums(const std::filesystem::path& root);

// Pool layout for the Turing service: <dir>/<case>/{image,label}.nii.gz,
// built from toy abdomens with tumors planted at `seed`.
void write_pool(const std::filesystem::path& dir, std::size_t n_cases, Seed seed, const Dims& dims = {48, 48, 32});

// A config whose count distribution always plans exactly `count` tumors.
pipeline::SynthConfig fixed_count_config(unsigned count);

}  // namespace tstest
