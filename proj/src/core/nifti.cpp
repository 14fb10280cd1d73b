#include "tumorsynth/core/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <vector>

namespace tumorsynth::nifti {
namespace {

#pragma pack(push, 1)
struct Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348);

constexpr std::int64_t kVoxOffset = 352;

template <typename T>
void swap_in_place(T& v) {
  auto* p = reinterpret_cast<unsigned char*>(&v);
  std::reverse(p, p + sizeof(T));
}

void swap_header(Header& h) {
  swap_in_place(h.sizeof_hdr);
  swap_in_place(h.extents);
  swap_in_place(h.session_error);
  for (auto& d : h.dim) swap_in_place(d);
  swap_in_place(h.intent_p1);
  swap_in_place(h.intent_p2);
  swap_in_place(h.intent_p3);
  swap_in_place(h.intent_code);
  swap_in_place(h.datatype);
  swap_in_place(h.bitpix);
  swap_in_place(h.slice_start);
  for (auto& p : h.pixdim) swap_in_place(p);
  swap_in_place(h.vox_offset);
  swap_in_place(h.scl_slope);
  swap_in_place(h.scl_inter);
  swap_in_place(h.slice_end);
  swap_in_place(h.cal_max);
  swap_in_place(h.cal_min);
  swap_in_place(h.slice_duration);
  swap_in_place(h.toffset);
  swap_in_place(h.glmax);
  swap_in_place(h.glmin);
  swap_in_place(h.qform_code);
  swap_in_place(h.sform_code);
  swap_in_place(h.quatern_b);
  swap_in_place(h.quatern_c);
  swap_in_place(h.quatern_d);
  swap_in_place(h.qoffset_x);
  swap_in_place(h.qoffset_y);
  swap_in_place(h.qoffset_z);
  for (int c = 0; c < 4; ++c) {
    swap_in_place(h.srow_x[c]);
    swap_in_place(h.srow_y[c]);
    swap_in_place(h.srow_z[c]);
  }
}

std::size_t bytes_per_voxel(DataType t) {
  switch (t) {
    case DataType::UInt8:
    case DataType::Int8: return 1;
    case DataType::Int16:
    case DataType::UInt16: return 2;
    case DataType::Int32:
    case DataType::UInt32:
    case DataType::Float32: return 4;
    case DataType::Float64:
    case DataType::Int64:
    case DataType::UInt64: return 8;
  }
  return 0;
}

bool known_datatype(std::int16_t code) {
  switch (static_cast<DataType>(code)) {
    case DataType::UInt8:
    case DataType::Int8:
    case DataType::Int16:
    case DataType::UInt16:
    case DataType::Int32:
    case DataType::UInt32:
    case DataType::Float32:
    case DataType::Float64:
    case DataType::Int64:
    case DataType::UInt64: return true;
  }
  return false;
}

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

GzHandle open_read(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) fail(ErrorCode::Io, "cannot open " + path.string());
  return f;
}

void read_exact(gzFile f, void* dst, std::size_t n, const std::filesystem::path& path) {
  auto* out = static_cast<unsigned char*>(dst);
  while (n > 0) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
    const int got = gzread(f, out, chunk);
    if (got <= 0) fail(ErrorCode::Io, "truncated NIfTI file " + path.string());
    out += got;
    n -= static_cast<std::size_t>(got);
  }
}

Mat3 quaternion_to_rotation(double b, double c, double d) {
  const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
  return {{{a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
           {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
           {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}}};
}

struct Parsed {
  Header header;
  bool swapped = false;
  HeaderInfo info;
};

Parsed parse_header(gzFile f, const std::filesystem::path& path) {
  Parsed p;
  read_exact(f, &p.header, sizeof(Header), path);
  Header& h = p.header;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    if (h.sizeof_hdr != 348) fail(ErrorCode::Io, "not a NIfTI-1 file: " + path.string());
    p.swapped = true;
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) {
    fail(ErrorCode::Io, "unsupported NIfTI variant (expected single-file n+1): " + path.string());
  }
  const int ndim = h.dim[0];
  if (ndim < 1 || ndim > 7) fail(ErrorCode::Io, "invalid dim[0] in " + path.string());
  for (int a = 4; a <= ndim; ++a) {
    if (h.dim[a] > 1) fail(ErrorCode::InvalidArgument, "non-3-D data in " + path.string());
  }
  if (!known_datatype(h.datatype)) {
    fail(ErrorCode::InvalidArgument, "unsupported NIfTI datatype " + std::to_string(h.datatype));
  }

  HeaderInfo& info = p.info;
  Geometry& g = info.geometry;
  for (int a = 0; a < 3; ++a) {
    const int n = (a + 1 <= ndim) ? h.dim[a + 1] : 1;
    if (n < 1) fail(ErrorCode::InvalidArgument, "invalid dimension in " + path.string());
    g.dims[a] = static_cast<std::size_t>(n);
  }
  info.datatype = static_cast<DataType>(h.datatype);
  info.slope = h.scl_slope;
  info.intercept = h.scl_inter;
  info.has_sform = h.sform_code > 0;
  info.has_qform = h.qform_code > 0;

  if (info.has_sform) {
    const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    for (int c = 0; c < 3; ++c) {
      double norm = 0;
      for (int r = 0; r < 3; ++r) norm += double(rows[r][c]) * double(rows[r][c]);
      norm = std::sqrt(norm);
      g.spacing[c] = norm;
      for (int r = 0; r < 3; ++r) g.direction[r][c] = norm > 0 ? rows[r][c] / norm : 0.0;
    }
    for (int r = 0; r < 3; ++r) g.origin[r] = rows[r][3];
  } else if (info.has_qform) {
    g.direction = quaternion_to_rotation(h.quatern_b, h.quatern_c, h.quatern_d);
    if (h.pixdim[0] < 0) {
      for (int r = 0; r < 3; ++r) g.direction[r][2] = -g.direction[r][2];
    }
    for (int a = 0; a < 3; ++a) g.spacing[a] = h.pixdim[a + 1];
    g.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
  } else {
    for (int a = 0; a < 3; ++a) g.spacing[a] = h.pixdim[a + 1];
  }
  g.validate();
  return p;
}

template <typename T>
void decode_as(const std::vector<unsigned char>& raw, bool swapped, std::vector<double>& out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
    if (swapped) swap_in_place(v);
    out[i] = static_cast<double>(v);
  }
}

// Returns scaled values (double) and the geometry.
std::pair<Geometry, std::vector<double>> read_scaled(const std::filesystem::path& path) {
  auto f = open_read(path);
  Parsed p = parse_header(f.get(), path);
  const Geometry& g = p.info.geometry;

  const auto offset = static_cast<std::int64_t>(p.header.vox_offset);
  if (offset < 348) fail(ErrorCode::Io, "invalid vox_offset in " + path.string());
  if (offset > 348) {
    std::vector<unsigned char> skip(static_cast<std::size_t>(offset - 348));
    read_exact(f.get(), skip.data(), skip.size(), path);
  }

  const std::size_t n = g.voxel_count();
  const std::size_t bpv = bytes_per_voxel(p.info.datatype);
  std::vector<unsigned char> raw(n * bpv);
  read_exact(f.get(), raw.data(), raw.size(), path);

  std::vector<double> values(n);
  switch (p.info.datatype) {
    case DataType::UInt8: decode_as<std::uint8_t>(raw, p.swapped, values); break;
    case DataType::Int8: decode_as<std::int8_t>(raw, p.swapped, values); break;
    case DataType::Int16: decode_as<std::int16_t>(raw, p.swapped, values); break;
    case DataType::UInt16: decode_as<std::uint16_t>(raw, p.swapped, values); break;
    case DataType::Int32: decode_as<std::int32_t>(raw, p.swapped, values); break;
    case DataType::UInt32: decode_as<std::uint32_t>(raw, p.swapped, values); break;
    case DataType::Float32: decode_as<float>(raw, p.swapped, values); break;
    case DataType::Float64: decode_as<double>(raw, p.swapped, values); break;
    case DataType::Int64: decode_as<std::int64_t>(raw, p.swapped, values); break;
    case DataType::UInt64: decode_as<std::uint64_t>(raw, p.swapped, values); break;
  }

  const double slope = p.info.slope;
  const double inter = p.info.intercept;
  const bool scaled = slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0);
  for (auto& v : values) {
    if (scaled) v = v * slope + inter;
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "non-finite voxel value in " + path.string());
  }
  return {g, std::move(values)};
}

Header make_header(const Geometry& g, DataType datatype, double slope, double intercept) {
  Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int a = 0; a < 3; ++a) {
    if (g.dims[a] > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
      fail(ErrorCode::InvalidArgument, "dimension too large for NIfTI-1");
    }
    h.dim[a + 1] = static_cast<std::int16_t>(g.dims[a]);
  }
  for (int a = 4; a < 8; ++a) h.dim[a] = 1;
  h.datatype = static_cast<std::int16_t>(datatype);
  h.bitpix = static_cast<std::int16_t>(bytes_per_voxel(datatype) * 8);
  h.vox_offset = static_cast<float>(kVoxOffset);
  h.scl_slope = static_cast<float>(slope);
  h.scl_inter = static_cast<float>(intercept);
  h.xyzt_units = 2;  // mm
  std::strncpy(h.descrip, "tumorsynth", sizeof(h.descrip) - 1);

  // qform: proper rotation plus qfac sign for the third axis.
  Mat3 r = g.direction;
  const double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                     r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                     r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
  double qfac = 1.0;
  if (det < 0) {
    qfac = -1.0;
    for (int row = 0; row < 3; ++row) r[row][2] = -r[row][2];
  }
  double a = 1.0 + r[0][0] + r[1][1] + r[2][2];
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r[2][1] - r[1][2]) / a;
    c = 0.25 * (r[0][2] - r[2][0]) / a;
    d = 0.25 * (r[1][0] - r[0][1]) / a;
  } else {
    const double xd = 1.0 + r[0][0] - (r[1][1] + r[2][2]);
    const double yd = 1.0 + r[1][1] - (r[0][0] + r[2][2]);
    const double zd = 1.0 + r[2][2] - (r[0][0] + r[1][1]);
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r[0][1] + r[1][0]) / b;
      d = 0.25 * (r[0][2] + r[2][0]) / b;
      a = 0.25 * (r[2][1] - r[1][2]) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r[0][1] + r[1][0]) / c;
      d = 0.25 * (r[1][2] + r[2][1]) / c;
      a = 0.25 * (r[0][2] - r[2][0]) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r[0][2] + r[2][0]) / d;
      c = 0.25 * (r[1][2] + r[2][1]) / d;
      a = 0.25 * (r[1][0] - r[0][1]) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  h.qform_code = 1;
  h.quatern_b = static_cast<float>(b);
  h.quatern_c = static_cast<float>(c);
  h.quatern_d = static_cast<float>(d);
  h.qoffset_x = static_cast<float>(g.origin[0]);
  h.qoffset_y = static_cast<float>(g.origin[1]);
  h.qoffset_z = static_cast<float>(g.origin[2]);
  h.pixdim[0] = static_cast<float>(qfac);
  for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(g.spacing[i]);
  for (int i = 4; i < 8; ++i) h.pixdim[i] = 1.0f;

  h.sform_code = 1;
  float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      rows[row][col] = static_cast<float>(g.direction[row][col] * g.spacing[col]);
    }
    rows[row][3] = static_cast<float>(g.origin[row]);
  }
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

bool wants_gzip(const std::filesystem::path& path) {
  const std::string s = path.string();
  return s.size() >= 3 && s.compare(s.size() - 3, 3, ".gz") == 0;
}

void write_file(const std::filesystem::path& path, const Header& h,
                const std::vector<unsigned char>& payload) {
  static_assert(std::endian::native == std::endian::little, "writer assumes little-endian host");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(kVoxOffset) + payload.size(), 0);
  std::memcpy(bytes.data(), &h, sizeof(Header));
  std::memcpy(bytes.data() + kVoxOffset, payload.data(), payload.size());

  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  if (wants_gzip(path)) {
    GzHandle f(gzopen(path.c_str(), "wb6"));
    if (!f) fail(ErrorCode::Io, "cannot write " + path.string());
    std::size_t done = 0;
    while (done < bytes.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
      if (gzwrite(f.get(), bytes.data() + done, chunk) != static_cast<int>(chunk)) {
        fail(ErrorCode::Io, "write failed: " + path.string());
      }
      done += chunk;
    }
    if (gzclose(f.release()) != Z_OK) fail(ErrorCode::Io, "write failed: " + path.string());
  } else {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
  }
}

template <typename T>
void encode_as(std::span<const double> values, std::vector<unsigned char>& out) {
  out.resize(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T v = static_cast<T>(values[i]);
    std::memcpy(out.data() + i * sizeof(T), &v, sizeof(T));
  }
}

}  // namespace

HeaderInfo read_header(const std::filesystem::path& path) {
  auto f = open_read(path);
  return parse_header(f.get(), path).info;
}

Volume3 load_volume(const std::filesystem::path& path) {
  auto [geometry, values] = read_scaled(path);
  std::vector<float> data(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    data[i] = static_cast<float>(values[i]);
    if (!std::isfinite(data[i])) fail(ErrorCode::InvalidArgument, "voxel value overflows float");
  }
  return Volume3(geometry, std::move(data));
}

Mask3 load_mask(const std::filesystem::path& path) {
  auto [geometry, values] = read_scaled(path);
  std::vector<std::uint8_t> data(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = values[i] > 0.5 ? 1 : 0;
  return Mask3(geometry, std::move(data));
}

void save_raw(const std::filesystem::path& path, const Geometry& geometry, DataType datatype,
              std::span<const double> stored, double slope, double intercept) {
  if (stored.size() != geometry.voxel_count()) {
    fail(ErrorCode::InvalidArgument, "value count does not match dims");
  }
  std::vector<unsigned char> payload;
  switch (datatype) {
    case DataType::UInt8: encode_as<std::uint8_t>(stored, payload); break;
    case DataType::Int8: encode_as<std::int8_t>(stored, payload); break;
    case DataType::Int16: encode_as<std::int16_t>(stored, payload); break;
    case DataType::UInt16: encode_as<std::uint16_t>(stored, payload); break;
    case DataType::Int32: encode_as<std::int32_t>(stored, payload); break;
    case DataType::UInt32: encode_as<std::uint32_t>(stored, payload); break;
    case DataType::Float32: encode_as<float>(stored, payload); break;
    case DataType::Float64: encode_as<double>(stored, payload); break;
    case DataType::Int64: encode_as<std::int64_t>(stored, payload); break;
    case DataType::UInt64: encode_as<std::uint64_t>(stored, payload); break;
  }
  write_file(path, make_header(geometry, datatype, slope, intercept), payload);
}

void save_volume(const Volume3& volume, const std::filesystem::path& path, ImageEncoding encoding) {
  const Geometry& g = volume.geometry();
  g.validate();
  std::vector<unsigned char> payload;
  if (encoding == ImageEncoding::Float32) {
    payload.resize(volume.size() * sizeof(float));
    std::memcpy(payload.data(), volume.values().data(), payload.size());
    write_file(path, make_header(g, DataType::Float32, 1.0, 0.0), payload);
    return;
  }

  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  bool integral = true;
  for (float v : volume.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    integral = integral && v == std::nearbyint(v);
  }
  if (volume.empty()) lo = hi = 0;
  float slope = 1.0f;
  float inter = 0.0f;
  if (!(integral && lo >= -32768.0f && hi <= 32767.0f)) {
    slope = hi > lo ? static_cast<float>((double(hi) - double(lo)) / 65535.0) : 1.0f;
    inter = static_cast<float>(double(lo) + 32768.0 * double(slope));
  }
  payload.resize(volume.size() * sizeof(std::int16_t));
  for (std::size_t i = 0; i < volume.size(); ++i) {
    const double q = std::nearbyint((double(volume[i]) - double(inter)) / double(slope));
    const auto s = static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
    std::memcpy(payload.data() + i * 2, &s, 2);
  }
  write_file(path, make_header(g, DataType::Int16, slope, inter), payload);
}

void save_mask(const Mask3& mask, const std::filesystem::path& path) {
  mask.geometry().validate();
  std::vector<unsigned char> payload(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) payload[i] = mask[i] ? 1 : 0;
  write_file(path, make_header(mask.geometry(), DataType::UInt8, 1.0, 0.0), payload);
}

bool is_nifti_path(const std::filesystem::path& path) {
  const std::string s = path.filename().string();
  auto ends = [&](std::string_view suf) {
    return s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".nii") || ends(".nii.gz");
}

std::string stem(const std::filesystem::path& path) {
  std::string s = path.filename().string();
  for (std::string_view suf : {".nii.gz", ".nii"}) {
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
      return s.substr(0, s.size() - suf.size());
    }
  }
  return s;
}

}  // namespace tumorsynth::nifti
