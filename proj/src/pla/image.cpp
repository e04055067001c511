#include "pla/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace pla {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open file: " + path);
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return data;
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_be32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x >> 24));
  v.push_back(static_cast<unsigned char>(x >> 16));
  v.push_back(static_cast<unsigned char>(x >> 8));
  v.push_back(static_cast<unsigned char>(x));
}

const unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

Image decode_png(const std::vector<unsigned char>& data,
                 const std::string& path) {
  require(data.size() > 8 && std::memcmp(data.data(), kPngSig, 8) == 0,
          ErrorCode::io, "not a PNG file: " + path);
  std::size_t pos = 8;
  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<unsigned char> idat;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 8 <= data.size() && !saw_iend) {
    std::uint32_t len = be32(&data[pos]);
    require(pos + 12 + len <= data.size(), ErrorCode::io,
            "truncated PNG chunk: " + path);
    std::string type(reinterpret_cast<const char*>(&data[pos + 4]), 4);
    const unsigned char* body = &data[pos + 8];
    if (type == "IHDR") {
      require(len == 13, ErrorCode::io, "bad IHDR: " + path);
      width = static_cast<int>(be32(body));
      height = static_cast<int>(be32(body + 4));
      bit_depth = body[8];
      color_type = body[9];
      require(body[12] == 0, ErrorCode::io, "interlaced PNG unsupported: " + path);
      require(bit_depth == 8, ErrorCode::io, "only 8-bit PNG supported: " + path);
      require(color_type == 0 || color_type == 2 || color_type == 6,
              ErrorCode::io, "unsupported PNG color type: " + path);
      saw_ihdr = true;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), body, body + len);
    } else if (type == "IEND") {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  require(saw_ihdr && saw_iend && width > 0 && height > 0, ErrorCode::io,
          "malformed PNG: " + path);
  int channels = color_type == 0 ? 1 : (color_type == 2 ? 3 : 4);
  std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<unsigned char> raw(static_cast<std::size_t>(height) * (stride + 1));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  int zrc = uncompress(raw.data(), &raw_len, idat.data(),
                       static_cast<uLong>(idat.size()));
  require(zrc == Z_OK && raw_len == raw.size(), ErrorCode::io,
          "PNG inflate failed: " + path);

  std::vector<unsigned char> px(static_cast<std::size_t>(height) * stride);
  for (int y = 0; y < height; ++y) {
    const unsigned char* row = &raw[static_cast<std::size_t>(y) * (stride + 1)];
    unsigned char filter = row[0];
    const unsigned char* src = row + 1;
    unsigned char* dst = &px[static_cast<std::size_t>(y) * stride];
    const unsigned char* up =
        y > 0 ? &px[static_cast<std::size_t>(y - 1) * stride] : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      int a = i >= static_cast<std::size_t>(channels) ? dst[i - channels] : 0;
      int b = up ? up[i] : 0;
      int c = (up && i >= static_cast<std::size_t>(channels)) ? up[i - channels] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default:
          throw Error(ErrorCode::io, "bad PNG filter byte: " + path);
      }
      dst[i] = static_cast<unsigned char>(v & 0xff);
    }
  }

  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.resize(px.size());
  for (std::size_t i = 0; i < px.size(); ++i)
    img.pixels[i] = static_cast<float>(px[i]) / 255.0f;
  return img;
}

void encode_png(const std::string& path, const Image& img) {
  require(img.channels == 1 || img.channels == 3 || img.channels == 4,
          ErrorCode::io, "PNG writer supports 1/3/4 channels");
  int color_type = img.channels == 1 ? 0 : (img.channels == 3 ? 2 : 6);
  std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (stride + 1));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    for (std::size_t i = 0; i < stride; ++i) {
      float v = img.pixels[static_cast<std::size_t>(y) * stride + i];
      int q = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      raw.push_back(static_cast<unsigned char>(q));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(bound);
  int zrc = compress2(comp.data(), &bound, raw.data(),
                      static_cast<uLong>(raw.size()), 6);
  require(zrc == Z_OK, ErrorCode::io, "PNG deflate failed");
  comp.resize(bound);

  std::vector<unsigned char> out(kPngSig, kPngSig + 8);
  auto chunk = [&](const char* type, const std::vector<unsigned char>& body) {
    put_be32(out, static_cast<std::uint32_t>(body.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), body.begin(), body.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    put_be32(out, crc);
  };
  std::vector<unsigned char> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);
  ihdr.push_back(static_cast<unsigned char>(color_type));
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  chunk("IHDR", ihdr);
  chunk("IDAT", comp);
  chunk("IEND", {});

  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  require(f.good(), ErrorCode::io, "short write: " + path);
}

Image decode_ppm(const std::vector<unsigned char>& data,
                 const std::string& path) {
  // Binary P6, 8-bit.
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size() &&
           (std::isspace(data[pos]) || data[pos] == '#')) {
      if (data[pos] == '#')
        while (pos < data.size() && data[pos] != '\n') ++pos;
      else
        ++pos;
    }
    std::string t;
    while (pos < data.size() && !std::isspace(data[pos]))
      t.push_back(static_cast<char>(data[pos++]));
    return t;
  };
  require(token() == "P6", ErrorCode::io, "not a P6 PPM: " + path);
  int w = std::stoi(token());
  int h = std::stoi(token());
  int maxv = std::stoi(token());
  require(w > 0 && h > 0 && maxv == 255, ErrorCode::io, "bad PPM header: " + path);
  ++pos;  // single whitespace after maxval
  std::size_t need = static_cast<std::size_t>(w) * h * 3;
  require(data.size() - pos >= need, ErrorCode::io, "truncated PPM: " + path);
  Image img;
  img.width = w;
  img.height = h;
  img.channels = 3;
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i)
    img.pixels[i] = static_cast<float>(data[pos + i]) / 255.0f;
  return img;
}

void encode_ppm(const std::string& path, const Image& img) {
  require(img.channels == 3, ErrorCode::io, "PPM writer requires 3 channels");
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot write file: " + path);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.pixels.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<unsigned char>(
        std::lround(std::clamp(img.pixels[i], 0.0f, 1.0f) * 255.0f));
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  require(f.good(), ErrorCode::io, "short write: " + path);
}

}  // namespace

Image read_image(const std::string& path) {
  auto data = read_file(path);
  require(!data.empty(), ErrorCode::io, "empty image file: " + path);
  if (data.size() > 8 && std::memcmp(data.data(), kPngSig, 8) == 0)
    return decode_png(data, path);
  if (data.size() > 2 && data[0] == 'P' && data[1] == '6')
    return decode_ppm(data, path);
  throw Error(ErrorCode::io, "unrecognized image format: " + path);
}

void write_image(const std::string& path, const Image& img) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
    encode_png(path, img);
  else if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0)
    encode_ppm(path, img);
  else
    throw Error(ErrorCode::io, "unsupported image extension: " + path);
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  require(out_w > 0 && out_h > 0, ErrorCode::shape, "resize: bad target size");
  Image out;
  out.width = out_w;
  out.height = out_h;
  out.channels = img.channels;
  out.pixels.resize(static_cast<std::size_t>(out_w) * out_h * img.channels);
  float sx = static_cast<float>(img.width) / out_w;
  float sy = static_cast<float>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    float fy = (y + 0.5f) * sy - 0.5f;
    int y0 = static_cast<int>(std::floor(fy));
    float wy = fy - y0;
    int y0c = std::clamp(y0, 0, img.height - 1);
    int y1c = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < out_w; ++x) {
      float fx = (x + 0.5f) * sx - 0.5f;
      int x0 = static_cast<int>(std::floor(fx));
      float wx = fx - x0;
      int x0c = std::clamp(x0, 0, img.width - 1);
      int x1c = std::clamp(x0 + 1, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c) {
        float top = img.at(y0c, x0c, c) * (1 - wx) + img.at(y0c, x1c, c) * wx;
        float bot = img.at(y1c, x0c, c) * (1 - wx) + img.at(y1c, x1c, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace pla
