#include "k2dyn/io.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace k2dyn {

namespace {

constexpr std::array<char, 4> kMagic = {'K', '2', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b;
  is.read(reinterpret_cast<char*>(b.data()), 4);
  if (!is) throw std::runtime_error("truncated packed stream");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::string codes_to_text(std::span<const NodeCode> codes) {
  std::string out;
  out.reserve(codes.size() * 5);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += to_bit_string(codes[i]);
  }
  return out;
}

std::vector<NodeCode> codes_from_text(const std::string& text) {
  std::vector<NodeCode> codes;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) codes.push_back(code_from_bits(tok));
  return codes;
}

void write_packed(std::ostream& os, const GridShape& g, std::uint64_t points,
                  std::span<const NodeCode> codes) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, g.side());
  put_u32(os, static_cast<std::uint32_t>(points));
  put_u32(os, static_cast<std::uint32_t>(codes.size()));
  std::uint8_t byte = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i % 2 == 0) {
      byte = codes[i].mask;
    } else {
      byte = static_cast<std::uint8_t>(byte | (codes[i].mask << 4));
      os.put(static_cast<char>(byte));
    }
  }
  if (codes.size() % 2 != 0) os.put(static_cast<char>(byte));
  if (!os) throw std::runtime_error("packed write failed");
}

PackedImage read_packed(std::istream& is) {
  std::array<char, 4> magic;
  is.read(magic.data(), 4);
  if (!is || magic != kMagic) {
    throw std::runtime_error("not a packed k2 stream (bad magic)");
  }
  PackedImage img;
  std::uint32_t side = get_u32(is);
  img.shape = GridShape::from_side(side);
  img.points = get_u32(is);
  std::uint32_t count = get_u32(is);
  img.codes.resize(count);
  for (std::uint32_t i = 0; i < count; i += 2) {
    int ch = is.get();
    if (ch < 0) throw std::runtime_error("truncated packed stream");
    auto byte = static_cast<std::uint8_t>(ch);
    img.codes[i] = NodeCode{static_cast<std::uint8_t>(byte & 0x0F)};
    if (i + 1 < count) {
      img.codes[i + 1] = NodeCode{static_cast<std::uint8_t>(byte >> 4)};
    }
  }
  return img;
}

}  // namespace k2dyn
