#include "daal/volume.hpp"

#include <algorithm>
#include <iostream>

#include <json.hpp>

#include "daal/binary_io.hpp"
#include "daal/error.hpp"

namespace daal {

namespace {

constexpr std::uint32_t kMvolVersion = 1;
constexpr std::uint8_t kDtypeU8 = 0;
constexpr std::uint8_t kDtypeF32 = 1;

// Maps 2D slice coordinates (row, col) of plane p at `index` to a voxel.
struct SliceAxes {
  std::size_t rows, cols;
};

SliceAxes slice_axes(const Dims& d, Plane p) {
  switch (p) {
    case Plane::Sagittal: return {d.dz, d.dy};
    case Plane::Coronal: return {d.dz, d.dx};
    case Plane::Axial: return {d.dy, d.dx};
  }
  return {0, 0};
}

std::size_t voxel_of(const LabeledVolume& v, Plane p, std::size_t index, std::size_t r,
                     std::size_t c) {
  switch (p) {
    case Plane::Sagittal: return v.index(index, c, r);
    case Plane::Coronal: return v.index(c, index, r);
    case Plane::Axial: return v.index(c, r, index);
  }
  return 0;
}

io::ByteWriter mvol_header(const Dims& dims, std::uint8_t dtype) {
  io::ByteWriter w;
  w.magic("MVOL");
  w.u32(kMvolVersion);
  w.u32(static_cast<std::uint32_t>(dims.dx));
  w.u32(static_cast<std::uint32_t>(dims.dy));
  w.u32(static_cast<std::uint32_t>(dims.dz));
  w.u8(dtype);
  return w;
}

Dims read_mvol_header(io::ByteReader& r, std::uint8_t expected_dtype) {
  r.expect_magic("MVOL");
  if (const auto version = r.u32(); version != kMvolVersion) {
    throw InputError(r.source() + ": unsupported MVOL version " + std::to_string(version));
  }
  Dims d;
  d.dx = r.u32();
  d.dy = r.u32();
  d.dz = r.u32();
  if (d.voxels() == 0) throw InputError(r.source() + ": zero-sized volume");
  const auto dtype = r.u8();
  if (dtype != expected_dtype) {
    throw InputError(r.source() + ": dtype " + std::to_string(dtype) + ", expected " +
                     std::to_string(expected_dtype));
  }
  return d;
}

void check_dims(const Dims& dims, std::size_t n) {
  if (dims.voxels() == 0 || dims.voxels() != n) {
    throw InputError("MVOL: voxel count does not match dims");
  }
}

}  // namespace

std::string_view plane_name(Plane p) noexcept {
  switch (p) {
    case Plane::Sagittal: return "sagittal";
    case Plane::Coronal: return "coronal";
    case Plane::Axial: return "axial";
  }
  return "?";
}

Plane parse_plane(std::string_view name) {
  for (Plane p : kPlanes) {
    if (plane_name(p) == name) return p;
  }
  throw InputError("unknown plane: " + std::string(name));
}

std::size_t Dims::extent(Plane p) const noexcept {
  switch (p) {
    case Plane::Sagittal: return dx;
    case Plane::Coronal: return dy;
    case Plane::Axial: return dz;
  }
  return 0;
}

void LabeledVolume::validate() const {
  if (dims.voxels() == 0) throw InputError("volume has a zero dimension");
  if (intensities.size() != dims.voxels() || mask.size() != dims.voxels()) {
    throw InputError("volume buffers do not match dims");
  }
}

std::size_t LabeledVolume::tumor_voxels() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

std::size_t AnchorIndices::operator[](Plane p) const noexcept {
  switch (p) {
    case Plane::Sagittal: return x;
    case Plane::Coronal: return y;
    case Plane::Axial: return z;
  }
  return 0;
}

std::size_t WindowConfig::left(Plane p) const noexcept {
  switch (p) {
    case Plane::Sagittal: return kx1;
    case Plane::Coronal: return ky1;
    case Plane::Axial: return kz1;
  }
  return 0;
}

std::size_t WindowConfig::right(Plane p) const noexcept {
  switch (p) {
    case Plane::Sagittal: return kx2;
    case Plane::Coronal: return ky2;
    case Plane::Axial: return kz2;
  }
  return 0;
}

std::vector<std::size_t> tumor_area_per_slice(const LabeledVolume& v, Plane p) {
  v.validate();
  std::vector<std::size_t> area(v.dims.extent(p), 0);
  for (std::size_t z = 0; z < v.dims.dz; ++z) {
    for (std::size_t y = 0; y < v.dims.dy; ++y) {
      for (std::size_t x = 0; x < v.dims.dx; ++x) {
        if (v.mask[v.index(x, y, z)] == 0) continue;
        const std::size_t at[3] = {x, y, z};
        ++area[at[static_cast<int>(p)]];
      }
    }
  }
  return area;
}

AnchorIndices select_anchors(const LabeledVolume& v) {
  if (v.tumor_voxels() == 0) throw InputError("select_anchors: mask has no tumor voxels");
  std::array<std::size_t, 3> best{};
  for (Plane p : kPlanes) {
    const auto area = tumor_area_per_slice(v, p);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    best[static_cast<int>(p)] =
        static_cast<std::size_t>(std::max_element(area.begin(), area.end()) - area.begin());
  }
  return {best[0], best[1], best[2]};
}

std::vector<SliceRef> slice_window(const AnchorIndices& a, const WindowConfig& w,
                                   const Dims& dims) {
  std::vector<SliceRef> out;
  out.reserve(w.slice_count());
  for (Plane p : kPlanes) {
    const std::size_t anchor = a[p];
    const std::size_t extent = dims.extent(p);
    if (anchor >= extent) {
      throw InputError("slice_window: " + std::string(plane_name(p)) + " anchor " +
                       std::to_string(anchor) + " outside extent " + std::to_string(extent));
    }
    const std::size_t lo = anchor >= w.left(p) ? anchor - w.left(p) : 0;
    const std::size_t hi = std::min(extent - 1, anchor + w.right(p));
    for (std::size_t i = lo; i <= hi; ++i) out.push_back({p, i, i == anchor});
  }
  return out;
}

double coverage_ratio(const LabeledVolume& v, std::span<const SliceRef> slices) {
  v.validate();
  std::array<std::vector<bool>, 3> chosen{std::vector<bool>(v.dims.dx, false),
                                          std::vector<bool>(v.dims.dy, false),
                                          std::vector<bool>(v.dims.dz, false)};
  for (const auto& s : slices) {
    auto& sel = chosen[static_cast<int>(s.plane)];
    if (s.index >= sel.size()) throw InputError("coverage_ratio: slice index out of range");
    sel[s.index] = true;
  }
  std::size_t total = 0, covered = 0;
  for (std::size_t z = 0; z < v.dims.dz; ++z) {
    for (std::size_t y = 0; y < v.dims.dy; ++y) {
      for (std::size_t x = 0; x < v.dims.dx; ++x) {
        if (v.mask[v.index(x, y, z)] == 0) continue;
        ++total;
        if (chosen[0][x] || chosen[1][y] || chosen[2][z]) ++covered;
      }
    }
  }
  if (total == 0) throw InputError("coverage_ratio: mask has no tumor voxels");
  return static_cast<double>(covered) / static_cast<double>(total);
}

Tile slice_image(const LabeledVolume& v, const SliceRef& s) {
  v.validate();
  if (s.index >= v.dims.extent(s.plane)) throw InputError("slice_image: index out of range");
  const auto ax = slice_axes(v.dims, s.plane);
  Tile t{ax.rows, ax.cols, std::vector<double>(ax.rows * ax.cols)};
  for (std::size_t r = 0; r < ax.rows; ++r) {
    for (std::size_t c = 0; c < ax.cols; ++c) {
      t(r, c) = v.intensities[voxel_of(v, s.plane, s.index, r, c)];
    }
  }
  return t;
}

Tile resize_bilinear(const Tile& src, std::size_t out_h, std::size_t out_w) {
  if (src.height == 0 || src.width == 0 || out_h == 0 || out_w == 0) {
    throw InputError("resize_bilinear: empty image");
  }
  auto source_coord = [](std::size_t dst, std::size_t src_len, std::size_t dst_len) {
    if (src_len == 1 || dst_len == 1) return 0.0;
    return static_cast<double>(dst) * static_cast<double>(src_len - 1) /
           static_cast<double>(dst_len - 1);
  };
  Tile out{out_h, out_w, std::vector<double>(out_h * out_w)};
  for (std::size_t r = 0; r < out_h; ++r) {
    const double sy = source_coord(r, src.height, out_h);
    const std::size_t y0 = std::min(static_cast<std::size_t>(sy), src.height - 1);
    const std::size_t y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double sx = source_coord(c, src.width, out_w);
      const std::size_t x0 = std::min(static_cast<std::size_t>(sx), src.width - 1);
      const std::size_t x1 = std::min(x0 + 1, src.width - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = src(y0, x0) + fx * (src(y0, x1) - src(y0, x0));
      const double bottom = src(y1, x0) + fx * (src(y1, x1) - src(y1, x0));
      out(r, c) = top + fy * (bottom - top);
    }
  }
  return out;
}

Tile extract_tile(const LabeledVolume& v, const SliceRef& s, std::size_t out_size) {
  v.validate();
  if (out_size == 0) throw InputError("extract_tile: out_size must be positive");
  if (s.index >= v.dims.extent(s.plane)) throw InputError("extract_tile: index out of range");
  const auto ax = slice_axes(v.dims, s.plane);
  std::size_t r0 = ax.rows, r1 = 0, c0 = ax.cols, c1 = 0;
  bool any = false;
  for (std::size_t r = 0; r < ax.rows; ++r) {
    for (std::size_t c = 0; c < ax.cols; ++c) {
      if (v.mask[voxel_of(v, s.plane, s.index, r, c)] == 0) continue;
      any = true;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (!any) {
    throw InputError("extract_tile: empty bounding box on " + std::string(plane_name(s.plane)) +
                     " slice " + std::to_string(s.index));
  }
  Tile crop{r1 - r0 + 1, c1 - c0 + 1, {}};
  crop.pixels.resize(crop.height * crop.width);
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) {
      crop(r - r0, c - c0) = v.intensities[voxel_of(v, s.plane, s.index, r, c)];
    }
  }
  return resize_bilinear(crop, out_size, out_size);
}

void write_mvol(const std::filesystem::path& path, const Dims& dims,
                std::span<const float> voxels) {
  check_dims(dims, voxels.size());
  auto w = mvol_header(dims, kDtypeF32);
  w.f32s(voxels);
  io::write_file(path, w.bytes());
}

void write_mvol(const std::filesystem::path& path, const Dims& dims,
                std::span<const std::uint8_t> voxels) {
  check_dims(dims, voxels.size());
  auto w = mvol_header(dims, kDtypeU8);
  for (auto b : voxels) w.u8(b);
  io::write_file(path, w.bytes());
}

std::vector<float> read_mvol_f32(const std::filesystem::path& path, Dims& dims) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, path.string());
  dims = read_mvol_header(r, kDtypeF32);
  auto voxels = r.f32s(dims.voxels());
  if (r.remaining() != 0) throw InputError(path.string() + ": trailing bytes after voxels");
  return voxels;
}

std::vector<std::uint8_t> read_mvol_u8(const std::filesystem::path& path, Dims& dims) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, path.string());
  dims = read_mvol_header(r, kDtypeU8);
  const auto raw = r.raw(dims.voxels());
  if (r.remaining() != 0) throw InputError(path.string() + ": trailing bytes after voxels");
  return {raw.begin(), raw.end()};
}

LabeledVolume load_labeled_volume(const std::filesystem::path& intensities,
                                  const std::filesystem::path& mask) {
  LabeledVolume v;
  Dims mask_dims;
  v.intensities = read_mvol_f32(intensities, v.dims);
  v.mask = read_mvol_u8(mask, mask_dims);
  if (!(mask_dims == v.dims)) throw InputError("intensity and mask volumes differ in dims");
  return v;
}

void write_tile(const std::filesystem::path& path, const Tile& t) {
  io::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(t.height));
  w.u32(static_cast<std::uint32_t>(t.width));
  for (double p : t.pixels) w.f32(static_cast<float>(p));
  io::write_file(path, w.bytes());
}

Tile read_tile(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, path.string());
  Tile t;
  t.height = r.u32();
  t.width = r.u32();
  const auto px = r.f32s(t.height * t.width);
  if (r.remaining() != 0) throw InputError(path.string() + ": trailing bytes after tile");
  t.pixels.assign(px.begin(), px.end());
  return t;
}

SliceExportSummary export_slices(const LabeledVolume& v, const std::string& patient_id,
                                 const WindowConfig& w, std::size_t out_size,
                                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  SliceExportSummary summary;
  summary.patient_id = patient_id;
  summary.anchors = select_anchors(v);
  const auto slices = slice_window(summary.anchors, w, v.dims);
  summary.coverage = coverage_ratio(v, slices);

  nlohmann::json sidecar;
  sidecar["patient_id"] = patient_id;
  sidecar["dims"] = {v.dims.dx, v.dims.dy, v.dims.dz};
  sidecar["anchors"] = {{"x", summary.anchors.x}, {"y", summary.anchors.y}, {"z", summary.anchors.z}};
  sidecar["window"] = {{"kx1", w.kx1}, {"kx2", w.kx2}, {"ky1", w.ky1},
                       {"ky2", w.ky2}, {"kz1", w.kz1}, {"kz2", w.kz2}};
  sidecar["requested_k"] = w.slice_count();
  sidecar["effective_k"] = slices.size();
  sidecar["coverage_ratio"] = summary.coverage;
  sidecar["tile_size"] = out_size;
  auto& list = sidecar["slices"] = nlohmann::json::array();

  for (const auto& s : slices) {
    SliceExportEntry e{s, 0, {}};
    const auto ax = slice_axes(v.dims, s.plane);
    for (std::size_t r = 0; r < ax.rows; ++r) {
      for (std::size_t c = 0; c < ax.cols; ++c) {
        if (v.mask[voxel_of(v, s.plane, s.index, r, c)] != 0) ++e.tumor_pixels;
      }
    }
    if (e.tumor_pixels == 0) {
      std::cerr << "warning: " << patient_id << " " << plane_name(s.plane) << " slice " << s.index
                << " has no tumor pixels; no tile written\n";
      ++summary.skipped;
    } else {
      e.tile_file = patient_id + "_" + std::string(plane_name(s.plane)) + "_" +
                    std::to_string(s.index) + ".tile";
      write_tile(out_dir / e.tile_file, extract_tile(v, s, out_size));
    }
    nlohmann::json item = {{"plane", plane_name(s.plane)},
                           {"index", s.index},
                           {"is_anchor", s.is_anchor},
                           {"tumor_pixels", e.tumor_pixels}};
    item["tile"] = e.tile_file.empty() ? nlohmann::json(nullptr) : nlohmann::json(e.tile_file);
    list.push_back(std::move(item));
    summary.entries.push_back(std::move(e));
  }
  io::write_text(out_dir / (patient_id + ".json"), sidecar.dump(2) + "\n");
  return summary;
}

}  // namespace daal
