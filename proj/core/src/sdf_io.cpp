#include "sqabs/sdf_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "sqabs/errors.hpp"
#include "sqabs/parallel.hpp"

namespace sqabs {

namespace {

constexpr char kMagic[4] = {'M', 'P', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

// The format is little-endian by definition; this code assumes a
// little-endian host (checked once at load/store).
void require_little_endian() {
  const std::uint32_t probe = 1;
  char byte;
  std::memcpy(&byte, &probe, 1);
  if (byte != 1) throw io_error("big-endian hosts are not supported");
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, std::size_t& offset) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw format_error("unexpected end of file at byte offset " +
                       std::to_string(offset));
  }
  offset += sizeof(T);
  return v;
}

}  // namespace

VoxelGrid load_sdf(const std::filesystem::path& path) {
  require_little_endian();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open " + path.string());

  std::size_t offset = 0;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw format_error(path.string() + ": bad magic at byte offset 0");
  }
  offset = 4;
  const auto version = read_pod<std::uint32_t>(is, offset);
  if (version != kVersion) {
    throw format_error(path.string() + ": unsupported version " +
                       std::to_string(version) + " at byte offset 4");
  }
  const auto nx = read_pod<std::uint32_t>(is, offset);
  const auto ny = read_pod<std::uint32_t>(is, offset);
  const auto nz = read_pod<std::uint32_t>(is, offset);
  if (nx < 2 || ny < 2 || nz < 2) {
    throw format_error(path.string() + ": dims must be >= 2");
  }
  const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  if (n > (std::size_t{1} << 33)) {
    throw format_error(path.string() + ": grid too large");
  }
  Eigen::Vector3d origin;
  origin.x() = read_pod<double>(is, offset);
  origin.y() = read_pod<double>(is, offset);
  origin.z() = read_pod<double>(is, offset);
  const double spacing = read_pod<double>(is, offset);
  if (!(spacing > 0.0)) {
    throw format_error(path.string() + ": spacing must be positive");
  }

  VoxelGrid grid = VoxelGrid::make({static_cast<int>(nx), static_cast<int>(ny),
                                    static_cast<int>(nz)},
                                   origin, spacing);
  is.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(is.gcount()) != n * sizeof(float)) {
    throw format_error(path.string() + ": payload ends at byte offset " +
                       std::to_string(offset + static_cast<std::size_t>(
                                                   std::max<std::streamsize>(
                                                       is.gcount(), 0))) +
                       ", expected " + std::to_string(offset + n * sizeof(float)) +
                       " bytes total");
  }
  return grid;
}

void store_sdf(const VoxelGrid& grid, const std::filesystem::path& path) {
  require_little_endian();
  grid.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw io_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(grid.dims[0]));
  write_pod(os, static_cast<std::uint32_t>(grid.dims[1]));
  write_pod(os, static_cast<std::uint32_t>(grid.dims[2]));
  write_pod(os, grid.origin.x());
  write_pod(os, grid.origin.y());
  write_pod(os, grid.origin.z());
  write_pod(os, grid.spacing);
  os.write(reinterpret_cast<const char*>(grid.values.data()),
           static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
  if (!os) throw io_error("write failed: " + path.string());
}

VoxelGrid load_sdf_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open " + path.string());
  std::string header;
  if (!std::getline(is, header)) {
    throw format_error(path.string() + ": missing header line");
  }
  std::istringstream hs(header);
  long nx, ny, nz;
  double ox, oy, oz, h;
  if (!(hs >> nx >> ny >> nz >> ox >> oy >> oz >> h) || nx < 2 || ny < 2 ||
      nz < 2 || !(h > 0.0)) {
    throw format_error(path.string() + ": bad header line");
  }
  VoxelGrid grid = VoxelGrid::make({static_cast<int>(nx), static_cast<int>(ny),
                                    static_cast<int>(nz)},
                                   {ox, oy, oz}, h);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v;
    if (!(is >> v)) {
      throw format_error(path.string() + ": expected " +
                         std::to_string(grid.size()) + " values, got " +
                         std::to_string(i));
    }
    grid.values[i] = static_cast<float>(v);
  }
  return grid;
}

void store_sdf_text(const VoxelGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw io_error("cannot open " + path.string() + " for writing");
  os.precision(9);  // round-trips float32 exactly
  os << grid.dims[0] << ' ' << grid.dims[1] << ' ' << grid.dims[2] << ' '
     << grid.origin.x() << ' ' << grid.origin.y() << ' ' << grid.origin.z()
     << ' ' << grid.spacing << '\n';
  for (const float v : grid.values) os << v << '\n';
  if (!os) throw io_error("write failed: " + path.string());
}

VoxelGrid load_sdf_any(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw io_error("cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::memcmp(magic, kMagic, 4) == 0) return load_sdf(path);
  return load_sdf_text(path);
}

VoxelGrid gen_superquadric_sdf(const std::vector<Superquadric>& prims,
                               const std::array<int, 3>& dims,
                               const Eigen::Vector3d& origin, double spacing,
                               unsigned threads) {
  if (prims.empty()) {
    throw validation_error("need at least one primitive to generate an SDF");
  }
  for (const auto& q : prims) q.validate();

  VoxelGrid grid = VoxelGrid::make(dims, origin, spacing);
  std::vector<std::array<double, kNumParams>> params(prims.size());
  for (std::size_t k = 0; k < prims.size(); ++k) {
    prims[k].to_params(params[k].data());
  }
  parallel_for(grid.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t lin = begin; lin < end; ++lin) {
      const Eigen::Vector3d x = grid.index_to_world(lin);
      double d = std::numeric_limits<double>::infinity();
      for (const auto& p : params) {
        d = std::min(d, radial_sdf_params(p.data(), x));
      }
      grid.values[lin] = static_cast<float>(d);
    }
  });
  return grid;
}

}  // namespace sqabs
