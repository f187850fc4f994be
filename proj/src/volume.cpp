#include "spherefeat/volume.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace spherefeat {

using nlohmann::json;

Volume::Volume(std::array<int, 3> d, int ch, std::array<double, 3> sp)
    : dims(d), spacing(sp), channels(ch) {
  require(d[0] > 0 && d[1] > 0 && d[2] > 0, "volume: dims must be positive");
  require(ch > 0, "volume: channel count must be positive");
  data.assign(voxels() * ch, 0.0);
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

double Volume::at_reflect(int x, int y, int z, int c) const {
  return at(reflect_index(x, dims[0]), reflect_index(y, dims[1]), reflect_index(z, dims[2]), c);
}

double Volume::sample(double x, double y, double z, int c) const {
  int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y)),
      z0 = static_cast<int>(std::floor(z));
  double fx = x - x0, fy = y - y0, fz = z - z0;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
        if (w != 0.0) acc += w * at_reflect(x0 + dx, y0 + dy, z0 + dz, c);
      }
  return acc;
}

Volume Volume::channel(int c) const {
  require(c >= 0 && c < channels, "volume: channel out of range");
  Volume out(dims, 1, spacing);
  std::copy(data.begin() + static_cast<std::ptrdiff_t>(voxels() * c),
            data.begin() + static_cast<std::ptrdiff_t>(voxels() * (c + 1)), out.data.begin());
  return out;
}

void Volume::validate() const {
  require(dims[0] > 0 && dims[1] > 0 && dims[2] > 0, "volume: dims must be positive");
  require(channels > 0, "volume: channel count must be positive");
  for (double s : spacing) require(s > 0 && std::isfinite(s), "volume: spacing must be positive");
  require(data.size() == voxels() * channels, "volume: data length does not match dims");
  for (double v : data) require(std::isfinite(v), "volume: non-finite value");
}

std::string volume_stem(const std::string& path) {
  for (const char* ext : {".json", ".raw"}) {
    std::size_t n = std::strlen(ext);
    if (path.size() > n && path.compare(path.size() - n, n, ext) == 0)
      return path.substr(0, path.size() - n);
  }
  return path;
}

namespace {

float to_le(float f) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    u = __builtin_bswap32(u);
    return std::bit_cast<float>(u);
  }
  return f;
}

}  // namespace

Volume load_volume(const std::string& path) {
  std::string stem = volume_stem(path);
  std::ifstream hs(stem + ".json");
  if (!hs) throw Error("load_volume: missing header " + stem + ".json");
  json h;
  try {
    hs >> h;
  } catch (const std::exception& e) {
    throw Error(std::string("load_volume: malformed header: ") + e.what());
  }
  std::string dtype = h.value("dtype", "f32");
  require(dtype == "f32", "load_volume: unsupported dtype " + dtype);
  require(h.value("order", "czyx") == "czyx", "load_volume: unsupported order");
  std::array<int, 3> dims = h.at("dims").get<std::array<int, 3>>();
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  if (h.contains("spacing")) spacing = h.at("spacing").get<std::array<double, 3>>();
  int channels = h.value("channels", 1);
  Volume v(dims, channels, spacing);

  std::ifstream rs(stem + ".raw", std::ios::binary | std::ios::ate);
  if (!rs) throw Error("load_volume: missing payload " + stem + ".raw");
  std::size_t bytes = static_cast<std::size_t>(rs.tellg());
  std::size_t expected = v.data.size() * sizeof(float);
  if (bytes != expected)
    throw Error("load_volume: size mismatch, header expects " + std::to_string(expected) +
                " bytes, payload has " + std::to_string(bytes));
  rs.seekg(0);
  std::vector<float> buf(v.data.size());
  rs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  for (std::size_t i = 0; i < buf.size(); ++i) v.data[i] = to_le(buf[i]);
  v.validate();
  return v;
}

void save_volume(const Volume& v, const std::string& path) {
  v.validate();
  std::string stem = volume_stem(path);
  json h = {{"dims", v.dims},           {"spacing", v.spacing}, {"channels", v.channels},
            {"dtype", "f32"},           {"order", "czyx"}};
  std::ofstream hs(stem + ".json");
  if (!hs) throw Error("save_volume: cannot write " + stem + ".json");
  hs << h.dump(2) << "\n";
  std::vector<float> buf(v.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = to_le(static_cast<float>(v.data[i]));
  std::ofstream rs(stem + ".raw", std::ios::binary);
  if (!rs) throw Error("save_volume: cannot write " + stem + ".raw");
  rs.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!rs || !hs) throw Error("save_volume: write failed for " + stem);
}

Volume gaussian_smooth(const Volume& v, double sigma, const WorkerPool& pool) {
  require(sigma >= 0 && std::isfinite(sigma), "gaussian_smooth: sigma must be >= 0");
  v.validate();
  if (sigma == 0.0) return v;
  int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) ksum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& w : k) w /= ksum;

  Volume cur = v, next = v;
  const int nx = v.dims[0], ny = v.dims[1], nz = v.dims[2];
  for (int axis = 0; axis < 3; ++axis) {
    int n = v.dims[axis];
    // one task per (channel, z) slab; each writes only its own slab
    pool.parallel_for(static_cast<std::size_t>(v.channels) * nz, [&](std::size_t task) {
      int c = static_cast<int>(task / nz), z = static_cast<int>(task % nz);
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          int p[3] = {x, y, z};
          double acc = 0.0;
          for (int i = -radius; i <= radius; ++i) {
            int q[3] = {p[0], p[1], p[2]};
            q[axis] = reflect_index(p[axis] + i, n);
            acc += k[i + radius] * cur.at(q[0], q[1], q[2], c);
          }
          next.at(x, y, z, c) = acc;
        }
    });
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace spherefeat
