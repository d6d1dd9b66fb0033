#include "cenic/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace cenic {

namespace {

// Skips whitespace and '#' comments in a PNM header, then reads an integer.
int header_int(std::istream& in, const std::string& name) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = -1;
  if (!(in >> v) || v <= 0) fail(ErrorKind::InputError, name + ": malformed PPM header");
  return v;
}

}  // namespace

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') fail(ErrorKind::InputError, path.string() + ": not a P6 PPM");
  const int w = header_int(in, path.string());
  const int h = header_int(in, path.string());
  const int maxval = header_int(in, path.string());
  if (maxval != 255) fail(ErrorKind::InputError, path.string() + ": only 8-bit PPM is supported");
  in.get();
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    fail(ErrorKind::InputError, path.string() + ": truncated pixel data");
  Tensor img({1, 3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(0, c, y, x) = raw[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
  return img;
}

void write_ppm(const std::filesystem::path& path, const Tensor& img) {
  if (img.n() != 1 || img.c() != 3) fail(ErrorKind::InputError, "write_ppm expects (1, 3, H, W), got " + img.shape().str());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << "P6\n" << img.w() << " " << img.h() << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.w()) * img.h() * 3);
  for (int y = 0; y < img.h(); ++y)
    for (int x = 0; x < img.w(); ++x)
      for (int c = 0; c < 3; ++c)
        raw[(static_cast<std::size_t>(y) * img.w() + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(std::clamp(img.at(0, c, y, x), 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

Tensor requantize8(const Tensor& img) {
  Tensor out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::round(std::clamp(img[i], 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

std::vector<Tensor> synthetic_images(int count, int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Tensor> out;
  for (int i = 0; i < count; ++i) {
    Tensor img({1, 3, height, width});
    // Coarse noise lattice, bilinearly upsampled, for texture.
    const int cell = 8;
    const int gh = height / cell + 2;
    const int gw = width / cell + 2;
    for (int c = 0; c < 3; ++c) {
      const double base = u(rng);
      const double gy = (u(rng) - 0.5) / height;
      const double gx = (u(rng) - 0.5) / width;
      const double amp = 0.05 + 0.2 * u(rng);
      const double fy = 2 * M_PI * (1 + 3 * u(rng)) / height;
      const double fx = 2 * M_PI * (1 + 3 * u(rng)) / width;
      std::vector<double> lattice(static_cast<std::size_t>(gh) * gw);
      for (double& v : lattice) v = nd(rng);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double ly = static_cast<double>(y) / cell;
          const double lx = static_cast<double>(x) / cell;
          const int y0 = static_cast<int>(ly);
          const int x0 = static_cast<int>(lx);
          const double ty = ly - y0;
          const double tx = lx - x0;
          auto L = [&](int a, int b) { return lattice[static_cast<std::size_t>(a) * gw + b]; };
          const double tex = (1 - ty) * ((1 - tx) * L(y0, x0) + tx * L(y0, x0 + 1)) +
                             ty * ((1 - tx) * L(y0 + 1, x0) + tx * L(y0 + 1, x0 + 1));
          const double v = base + gy * y * 0.5 + gx * x * 0.5 + amp * std::sin(fy * y) * std::cos(fx * x) +
                           0.08 * tex + 0.01 * nd(rng);
          img.at(0, c, y, x) = std::clamp(v, 0.0, 1.0);
        }
    }
    out.push_back(requantize8(img));
  }
  return out;
}

std::vector<Tensor> load_image_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorKind::DataError, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Tensor> out;
  for (const auto& f : files) {
    try {
      out.push_back(read_ppm(f));
    } catch (const Error&) {
      continue;
    }
  }
  if (out.empty()) fail(ErrorKind::DataError, "no readable PPM images in " + dir.string());
  return out;
}

}  // namespace cenic
