#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/pipeline/pipeline.hpp"
#include "tumorsynth/pipeline/toy_data.hpp"

namespace fs = std::filesystem;

namespace tstest {

TempDir::TempDir(const std::string& prefix) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const fs::path p = fs::temp_directory_path() / (prefix + "-" + std::to_string(rd()));
    if (fs::create_directory(p)) {
      path_ = p;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Geometry make_geometry(const Dims& dims, const Vec3& spacing, const Vec3& origin) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.origin = origin;
  return g;
}

Mask3 ball_mask(const Geometry& g, const Vec3& c, double radius_mm) {
  Mask3 m(g, 0);
  for (std::size_t k = 0; k < g.dims[2]; ++k) {
    for (std::size_t j = 0; j < g.dims[1]; ++j) {
      for (std::size_t i = 0; i < g.dims[0]; ++i) {
        const Vec3 p = g.voxel_to_world({double(i), double(j), double(k)});
        const double d2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) + (p[2] - c[2]) * (p[2] - c[2]);
        if (d2 <= radius_mm * radius_mm) m(i, j, k) = 1;
      }
    }
  }
  return m;
}

Mask3 box_mask(const Geometry& g, const Index3& lo, const Index3& hi) {
  Mask3 m(g, 0);
  for (auto k = lo[2]; k < hi[2]; ++k) {
    for (auto j = lo[1]; j < hi[1]; ++j) {
      for (auto i = lo[0]; i < hi[0]; ++i) {
        if (g.contains({i, j, k})) m(std::size_t(i), std::size_t(j), std::size_t(k)) = 1;
      }
    }
  }
  return m;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t checksum(const fs::path& p) {
  const auto bytes = read_bytes(p);
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<std::pair<std::string, std::uint64_t>> tree_checksums(const fs::path& root) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).generic_string(), checksum(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

pipeline::SynthConfig fixed_count_config(unsigned count) {
  pipeline::SynthConfig cfg;
  cfg.tumor_count_probabilities = {0, 0, 0, 0, 0};
  cfg.tumor_count_probabilities.at(count - 1) = 1.0;
  return cfg;
}

void write_pool(const fs::path& dir, std::size_t n_cases, Seed seed, const Dims& dims) {
  auto cfg = fixed_count_config(1);
  cfg.size_class_weights = {0, 1, 1, 0};
  cfg.effects.satellite_rate = 0;
  for (std::size_t c = 0; c < n_cases; ++c) {
    const auto [ct, liver] = pipeline::make_toy_case(dims, {1.5, 1.5, 1.5}, derive_seed(seed, "pool-case", c));
    const auto r = pipeline::synthesize_case(ct, liver, cfg, derive_seed(seed, "pool-synth", c));
    char name[32];
    std::snprintf(name, sizeof(name), "case%02zu", c);
    nifti::save_volume(r.image, dir / name / "image.nii.gz");
    nifti::save_mask(r.label, dir / name / "label.nii.gz");
  }
}

}  // namespace tstest
