#include "helipad/io.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "helipad/imgproc.hpp"

namespace helipad {

namespace {

struct Header {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
};

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  // Skips whitespace and '#' comments between header tokens.
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = 0;
  if (!(in >> v)) throw IoError("malformed header in " + path.string());
  return v;
}

Header read_header(std::istream& in, const std::filesystem::path& path) {
  Header h;
  char m[2];
  if (!in.read(m, 2)) throw IoError("cannot read header of " + path.string());
  h.magic.assign(m, 2);
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  h.maxval = read_header_int(in, path);
  in.get();  // single whitespace before the raster
  if (h.width < 1 || h.height < 1 || h.maxval != 255) {
    throw IoError("unsupported dimensions or maxval in " + path.string());
  }
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

GrayImage read_p5_body(std::istream& in, const Header& h, const std::filesystem::path& path) {
  GrayImage img(h.width, h.height);
  auto px = img.pixels();
  if (!in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()))) {
    throw IoError("truncated raster in " + path.string());
  }
  return img;
}

RgbImage read_p6_body(std::istream& in, const Header& h, const std::filesystem::path& path) {
  RgbImage img(h.width, h.height);
  if (!in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()))) {
    throw IoError("truncated raster in " + path.string());
  }
  return img;
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.magic != "P5") throw IoError(path.string() + " is not a binary PGM");
  return read_p5_body(in, h, path);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  auto out = open_out(path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  auto px = img.pixels();
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_pgm(const std::filesystem::path& path, const BinaryImage& mask) { write_pgm(path, to_gray(mask)); }

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.magic != "P6") throw IoError(path.string() + " is not a binary PPM");
  return read_p6_body(in, h, path);
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  auto out = open_out(path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

GrayImage read_image(const std::filesystem::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.magic == "P5") return read_p5_body(in, h, path);
  if (h.magic == "P6") return to_grayscale(read_p6_body(in, h, path));
  throw IoError(path.string() + ": unsupported image format (expected P5 or P6)");
}

}  // namespace helipad
