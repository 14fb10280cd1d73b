#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "tumorsynth/core/grid.hpp"

namespace tumorsynth::nifti {

// NIfTI-1 datatype codes we read and write.
enum class DataType : std::int16_t {
  UInt8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
  Int8 = 256,
  UInt16 = 512,
  UInt32 = 768,
  Int64 = 1024,
  UInt64 = 1280,
};

enum class ImageEncoding {
  Float32,  // exact
  Int16,    // scl_slope/scl_inter quantized, error <= slope / 2
};

struct HeaderInfo {
  Geometry geometry;
  DataType datatype = DataType::Float32;
  double slope = 1.0;  // as stored (0 means "no scaling")
  double intercept = 0.0;
  bool has_sform = false;
  bool has_qform = false;
};

// Header only. Geometry comes from the sform when sform_code > 0, else the
// qform, else pixdim with an identity direction.
HeaderInfo read_header(const std::filesystem::path& path);

// Grid values are stored * slope + intercept (slope == 0 means identity).
Volume3 load_volume(const std::filesystem::path& path);

// Values after scaling are thresholded at > 0.5.
Mask3 load_mask(const std::filesystem::path& path);

// ".nii.gz" paths are gzip-compressed, anything else is written raw.
void save_volume(const Volume3& volume, const std::filesystem::path& path,
                 ImageEncoding encoding = ImageEncoding::Float32);
void save_mask(const Mask3& mask, const std::filesystem::path& path);

// Low-level writer; performs no validation of geometry or values. Exists for
// fixtures that need odd headers (non-unit slopes, broken spacing).
void save_raw(const std::filesystem::path& path, const Geometry& geometry, DataType datatype,
              std::span<const double> stored, double slope, double intercept);

bool is_nifti_path(const std::filesystem::path& path);

// "case.nii.gz" -> "case"
std::string stem(const std::filesystem::path& path);

}  // namespace tumorsynth::nifti
