#include "sockweave/perception/perception.hpp"

#include "sockweave/sim/sim.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace sockweave::perception {

bool is_binary(const MaskImage& mask) { return ((mask == 0) || (mask == 255)).all(); }

namespace {

sim::Polygon sock_outline(const sim::SimState& state) { return state.sock.particles; }

struct Bounds {
  double min_x, max_x, min_y, max_y;
};

Bounds bounds_of(const sim::Polygon& poly) {
  Bounds b{1e300, -1e300, 1e300, -1e300};
  for (const auto& p : poly) {
    b.min_x = std::min(b.min_x, p.x());
    b.max_x = std::max(b.max_x, p.x());
    b.min_y = std::min(b.min_y, p.y());
    b.max_y = std::max(b.max_y, p.y());
  }
  return b;
}

MaskImage rasterize(const sim::Polygon& poly) {
  MaskImage mask = MaskImage::Zero(kImageSize, kImageSize);
  if (poly.size() < 3) return mask;
  const auto b = bounds_of(poly);
  for (int r = 0; r < kImageSize; ++r) {
    for (int c = 0; c < kImageSize; ++c) {
      const auto p = pixel_center(r, c);
      if (p.x() < b.min_x || p.x() > b.max_x || p.y() < b.min_y || p.y() > b.max_y) continue;
      if (sim::point_in_polygon(poly, p)) mask(r, c) = 255;
    }
  }
  return mask;
}

}  // namespace

OracleView oracle_view(const sim::SimState& state) {
  OracleView v;
  v.sock = rasterize(sock_outline(state));
  const MaskImage foot = rasterize(state.foot_outline);
  v.foot = (v.sock == 255).select(MaskImage::Zero(kImageSize, kImageSize), foot);
  v.depth = DepthMap::Ones(kImageSize, kImageSize);
  for (int r = 0; r < kImageSize; ++r) {
    for (int c = 0; c < kImageSize; ++c) {
      if (v.sock(r, c) == 0 && foot(r, c) == 0) continue;
      const double foot_rule = 0.5 + 0.3 * state.foot.cross_section_profile(pixel_center(r, c));
      const double d = v.sock(r, c) ? foot_rule - 0.05 : foot_rule;
      v.depth(r, c) = static_cast<float>(std::clamp(d, 0.0, 1.0));
    }
  }
  return v;
}

MaskImage oracle_segment(const sim::SimState& state, Target target) {
  const MaskImage sock = rasterize(sock_outline(state));
  if (target == Target::sock) return sock;
  const MaskImage foot = rasterize(state.foot_outline);
  return (sock == 255).select(MaskImage::Zero(kImageSize, kImageSize), foot);
}

DepthMap oracle_depth(const sim::SimState& state) { return oracle_view(state).depth; }

// ---------------------------------------------------------------------------
// PGM

namespace {

void write_header(std::ofstream& out, Eigen::Index w, Eigen::Index h, int maxval) {
  out << "P5\n" << w << ' ' << h << '\n' << maxval << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string next_token(std::istream& in) {
  std::string tok;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

}  // namespace

void write_pgm8(const std::string& path, const Image<std::uint8_t>& img) {
  auto out = open_out(path);
  write_header(out, img.cols(), img.rows(), 255);
  out.write(reinterpret_cast<const char*>(img.data()), img.size());
}

void write_pgm16(const std::string& path, const Image<std::uint16_t>& img) {
  auto out = open_out(path);
  write_header(out, img.cols(), img.rows(), 65535);
  std::string bytes(static_cast<std::size_t>(img.size()) * 2, '\0');
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    bytes[2 * i] = static_cast<char>(img.data()[i] >> 8);
    bytes[2 * i + 1] = static_cast<char>(img.data()[i] & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  if (next_token(in) != "P5") throw std::runtime_error(path + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw std::runtime_error(path + ": bad PGM dimensions");
  PgmImage img;
  img.maxval = maxval;
  img.pixels.resize(h, w);
  const int bpp = maxval > 255 ? 2 : 1;
  std::string bytes(static_cast<std::size_t>(w) * h * bpp, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw std::runtime_error(path + ": truncated PGM");
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    const auto hi = static_cast<unsigned char>(bytes[bpp * i]);
    img.pixels.data()[i] = bpp == 2 ? static_cast<std::uint16_t>((hi << 8) | static_cast<unsigned char>(bytes[2 * i + 1]))
                                    : static_cast<std::uint16_t>(hi);
  }
  return img;
}

Image<std::uint16_t> quantize_depth(const Image<float>& depth) {
  return depth.unaryExpr([](float d) -> std::uint16_t {
    if (!std::isfinite(d)) return 0;
    return static_cast<std::uint16_t>(std::lround(std::clamp(static_cast<double>(d), 0.0, 1.0) * 65535.0));
  });
}

Image<float> dequantize_depth(const Image<std::uint16_t>& q) {
  return q.unaryExpr([](std::uint16_t v) { return static_cast<float>(v / 65535.0); });
}

void write_depth_pgm(const std::string& path, const DepthMap& depth) { write_pgm16(path, quantize_depth(depth)); }

void write_masked_depth_pgm(const std::string& path, const MaskedDepth<float>& md) {
  write_pgm16(path, quantize_depth(md.values));
  if (md.fill == FillMode::nan) {
    std::ofstream note(path + ".txt");
    note << "fill=nan: pixels outside the mask are stored as 0\n";
  }
}

DepthMap read_depth_pgm(const std::string& path) {
  auto img = read_pgm(path);
  if (img.maxval != 65535) throw std::runtime_error(path + ": depth PGM must have maxval 65535");
  return dequantize_depth(img.pixels);
}

MaskImage read_mask_pgm(const std::string& path) {
  auto img = read_pgm(path);
  if (img.maxval != 255) throw std::runtime_error(path + ": mask PGM must have maxval 255");
  MaskImage m = img.pixels.cast<std::uint8_t>();
  if (!is_binary(m)) throw std::runtime_error(path + ": mask has values other than 0 and 255");
  return m;
}

}  // namespace sockweave::perception
