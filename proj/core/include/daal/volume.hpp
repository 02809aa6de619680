#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace daal {

// Plane convention: sagittal slices fix x, coronal fix y, axial fix z.
enum class Plane : std::uint8_t { Sagittal = 0, Coronal = 1, Axial = 2 };

inline constexpr std::array<Plane, 3> kPlanes{Plane::Sagittal, Plane::Coronal, Plane::Axial};

std::string_view plane_name(Plane p) noexcept;
Plane parse_plane(std::string_view name);

struct Dims {
  std::size_t dx = 0, dy = 0, dz = 0;

  std::size_t voxels() const noexcept { return dx * dy * dz; }
  std::size_t extent(Plane p) const noexcept;
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Scalar volume plus binary tumor mask, both stored x-fastest.
struct LabeledVolume {
  Dims dims;
  std::vector<float> intensities;
  std::vector<std::uint8_t> mask;  // 0 = background, nonzero = tumor

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + dims.dx * (y + dims.dy * z);
  }
  /// Throws InputError if dims or buffer sizes are inconsistent.
  void validate() const;
  std::size_t tumor_voxels() const noexcept;
};

struct AnchorIndices {
  std::size_t x = 0, y = 0, z = 0;

  std::size_t operator[](Plane p) const noexcept;
  friend bool operator==(const AnchorIndices&, const AnchorIndices&) = default;
};

/// Left/right neighbor counts around each anchor.
struct WindowConfig {
  std::size_t kx1 = 0, kx2 = 0;
  std::size_t ky1 = 0, ky2 = 0;
  std::size_t kz1 = 0, kz2 = 0;

  std::size_t left(Plane p) const noexcept;
  std::size_t right(Plane p) const noexcept;
  /// K = kx1 + kx2 + ky1 + ky2 + kz1 + kz2 + 3
  std::size_t slice_count() const noexcept { return kx1 + kx2 + ky1 + ky2 + kz1 + kz2 + 3; }
};

struct SliceRef {
  Plane plane = Plane::Axial;
  std::size_t index = 0;
  bool is_anchor = false;

  friend bool operator==(const SliceRef&, const SliceRef&) = default;
};

/// Row-major 2D image. Internal precision is double; tiles are exported as f32.
struct Tile {
  std::size_t height = 0, width = 0;
  std::vector<double> pixels;

  double operator()(std::size_t r, std::size_t c) const noexcept { return pixels[r * width + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return pixels[r * width + c]; }
};

/// Count of tumor voxels in each cross-section of the given plane.
std::vector<std::size_t> tumor_area_per_slice(const LabeledVolume& v, Plane p);

/// Per plane, the slice with the largest tumor area; ties go to the lowest
/// index. Throws InputError when the mask is empty.
AnchorIndices select_anchors(const LabeledVolume& v);

/// Slice list ordered sagittal, coronal, axial; each plane contributes
/// [anchor - k1, anchor + k2] clipped to the plane extent.
std::vector<SliceRef> slice_window(const AnchorIndices& a, const WindowConfig& w, const Dims& dims);

/// Fraction of tumor voxels lying on at least one selected slice.
double coverage_ratio(const LabeledVolume& v, std::span<const SliceRef> slices);

/// The 2D cross-section of `s`. Rows/cols: sagittal (z, y), coronal (z, x),
/// axial (y, x).
Tile slice_image(const LabeledVolume& v, const SliceRef& s);

/// Align-corners bilinear resize; a source axis of length 1 is replicated.
Tile resize_bilinear(const Tile& src, std::size_t out_h, std::size_t out_w);

/// Crops the slice to the tight bounding box of its tumor pixels and resizes
/// the crop to out_size x out_size. Throws InputError for a tumor-free slice.
Tile extract_tile(const LabeledVolume& v, const SliceRef& s, std::size_t out_size = 224);

// MVOL: "MVOL", u32 version=1, u32 dx, dy, dz, u8 dtype (0 = u8, 1 = f32),
// then voxels x-fastest. All little-endian.
void write_mvol(const std::filesystem::path& path, const Dims& dims, std::span<const float> voxels);
void write_mvol(const std::filesystem::path& path, const Dims& dims,
                std::span<const std::uint8_t> voxels);
std::vector<float> read_mvol_f32(const std::filesystem::path& path, Dims& dims);
std::vector<std::uint8_t> read_mvol_u8(const std::filesystem::path& path, Dims& dims);

LabeledVolume load_labeled_volume(const std::filesystem::path& intensities,
                                  const std::filesystem::path& mask);

// Tile file: u32 height, u32 width, then height*width f32, little-endian.
void write_tile(const std::filesystem::path& path, const Tile& t);
Tile read_tile(const std::filesystem::path& path);

struct SliceExportEntry {
  SliceRef slice;
  std::size_t tumor_pixels = 0;
  std::string tile_file;  // empty when skipped
};

struct SliceExportSummary {
  std::string patient_id;
  AnchorIndices anchors;
  std::vector<SliceExportEntry> entries;
  double coverage = 0.0;
  std::size_t skipped = 0;
};

/// Anchor selection, windowing, coverage and tile export for one patient.
/// Writes `<patient>_<plane>_<index>.tile` for each slice with tumor pixels
/// and `<patient>.json` describing the slice list. Tumor-free slices stay in
/// the list but produce no tile.
SliceExportSummary export_slices(const LabeledVolume& v, const std::string& patient_id,
                                 const WindowConfig& w, std::size_t out_size,
                                 const std::filesystem::path& out_dir);

}  // namespace daal
