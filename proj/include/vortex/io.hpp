#pragma once

// File formats: key = value configs, slice CSVs, binary state files, PPM
// heatmaps and SHA-256 digests.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "vortex/error.hpp"
#include "vortex/grid.hpp"

namespace vortex {

inline constexpr int kFormatVersion = 1;

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(ErrorCode::Io, "number formatting failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [end, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || end != last)
    throw Error(ErrorCode::InvalidConfig, std::string(what) + ": not a number: '" + std::string(s) + "'");
  return v;
}

inline int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw Error(ErrorCode::InvalidConfig, std::string(what) + ": not an integer: '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(std::string_view s, std::string_view what) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorCode::InvalidConfig, std::string(what) + ": not a boolean: '" + std::string(s) + "'");
}

// -- config files -------------------------------------------------------------

/// Flat `section.key = value` map. Lines starting with '#' and blank lines
/// are ignored; a trailing "# ..." after whitespace is a comment.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find(" #");
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = value;
  }
  return kv;
}

/// Canonical text: keys sorted, one per line.
inline std::string serialize_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_bytes(const std::filesystem::path& p, std::string_view bytes) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + p.string());
}

// -- slices -------------------------------------------------------------------------

inline const char* axis_name(int cart) { return cart == 0 ? "x" : cart == 1 ? "y" : "z"; }

/// `# scenario=<id> t=<time> plane=<ab> offset=<value>` then `a,b,re,im,abs2`
/// rows in grid order.
inline std::string slice_csv(const ComplexField& f, double offset) {
  const auto& g = f.grid;
  if (g.rank != 2) throw Error(ErrorCode::InvalidArgument, "slices are two-dimensional");
  std::string out = "# scenario=" + f.scenario + " t=" + format_double(f.time) + " plane=" + axis_name(g.axes[0]) +
                    axis_name(g.axes[1]) + " offset=" + format_double(offset) + "\n";
  out.reserve(out.size() + f.size() * 80);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto idx = g.unravel(i);
    const Complex v = f[i];
    out += format_double(g.coord(0, idx[0]));
    out += ',';
    out += format_double(g.coord(1, idx[1]));
    out += ',';
    out += format_double(v.real());
    out += ',';
    out += format_double(v.imag());
    out += ',';
    out += format_double(std::norm(v));
    out += '\n';
  }
  return out;
}

// -- binary state ---------------------------------------------------------------------

/// One text header line describing the grid, then (re, im) pairs as
/// little-endian IEEE doubles in grid order.
inline std::string state_bytes(const ComplexField& f) {
  const auto& g = f.grid;
  std::string h = "vortexstate " + std::to_string(kFormatVersion) + " rank=" + std::to_string(g.rank);
  for (int a = 0; a < g.rank; ++a)
    h += std::string(" ") + axis_name(g.axes[a]) + "=" + format_double(g.lo[a]) + ":" + format_double(g.hi[a]) + ":" +
         std::to_string(g.n[a]);
  h += " fixed=" + format_double(g.fixed[0]) + "," + format_double(g.fixed[1]) + "," + format_double(g.fixed[2]);
  h += " t=" + format_double(f.time) + " scenario=" + f.scenario + "\n";
  std::string out = h;
  const std::size_t at = out.size();
  out.resize(at + f.size() * 16);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double parts[2] = {f[i].real(), f[i].imag()};
    for (int k = 0; k < 2; ++k) {
      std::uint64_t bits;
      std::memcpy(&bits, &parts[k], 8);
      for (int b = 0; b < 8; ++b) out[at + i * 16 + k * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
  return out;
}

inline ComplexField parse_state(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorCode::Io, "state file lacks a header");
  std::istringstream head{std::string(bytes.substr(0, nl))};
  std::string tag, version;
  head >> tag >> version;
  if (tag != "vortexstate" || version != std::to_string(kFormatVersion))
    throw Error(ErrorCode::Io, "unsupported state file format");
  GridSpec g;
  g.rank = 0;
  g.n = {1, 1, 1};
  ComplexField f;
  int axes_seen = 0;
  std::string item;
  while (head >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Io, "bad state header item " + item);
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    if (key == "rank") {
      g.rank = parse_int(val, key);
    } else if (key == "x" || key == "y" || key == "z") {
      if (axes_seen == 3) throw Error(ErrorCode::Io, "too many axes in state header");
      const auto c1 = val.find(':'), c2 = val.rfind(':');
      if (c1 == std::string::npos || c1 == c2) throw Error(ErrorCode::Io, "bad axis entry " + item);
      const int slot = axes_seen++;
      g.axes[slot] = key[0] - 'x';
      g.lo[slot] = parse_double(std::string_view(val).substr(0, c1), key);
      g.hi[slot] = parse_double(std::string_view(val).substr(c1 + 1, c2 - c1 - 1), key);
      g.n[slot] = parse_int(std::string_view(val).substr(c2 + 1), key);
    } else if (key == "fixed") {
      std::istringstream fs(val);
      std::string part;
      for (int c = 0; c < 3 && std::getline(fs, part, ','); ++c) g.fixed[c] = parse_double(part, key);
    } else if (key == "t") {
      f.time = parse_double(val, key);
    } else if (key == "scenario") {
      f.scenario = val;
    }
  }
  if (axes_seen != g.rank) throw Error(ErrorCode::Io, "state header axis count does not match its rank");
  g.validate();
  f.grid = g;
  const std::size_t n = g.size();
  if (bytes.size() - nl - 1 != n * 16) throw Error(ErrorCode::Io, "state payload has the wrong size");
  f.data.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double parts[2];
    for (int k = 0; k < 2; ++k) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[i * 16 + k * 8 + b]) << (8 * b);
      std::memcpy(&parts[k], &bits, 8);
    }
    f.data[i] = {parts[0], parts[1]};
  }
  return f;
}

// -- heatmaps -----------------------------------------------------------------------------

using Rgb = std::array<std::uint8_t, 3>;

// Perceptually uniform dark-blue to yellow ramp.
inline constexpr std::array<Rgb, 256> kViridis{{
    {68, 1, 84}, {68, 2, 86}, {69, 4, 87}, {69, 5, 89}, {70, 7, 90}, {70, 8, 92},
    {70, 10, 93}, {70, 11, 94}, {71, 13, 96}, {71, 14, 97}, {71, 16, 99}, {71, 17, 100},
    {71, 19, 101}, {72, 20, 103}, {72, 22, 104}, {72, 23, 105}, {72, 24, 106}, {72, 26, 108},
    {72, 27, 109}, {72, 28, 110}, {72, 29, 111}, {72, 31, 112}, {72, 32, 113}, {72, 33, 115},
    {72, 35, 116}, {72, 36, 117}, {72, 37, 118}, {72, 38, 119}, {72, 40, 120}, {72, 41, 121},
    {71, 42, 122}, {71, 44, 122}, {71, 45, 123}, {71, 46, 124}, {71, 47, 125}, {70, 48, 126},
    {70, 50, 126}, {70, 51, 127}, {70, 52, 128}, {69, 53, 129}, {69, 55, 129}, {69, 56, 130},
    {68, 57, 131}, {68, 58, 131}, {68, 59, 132}, {67, 61, 132}, {67, 62, 133}, {66, 63, 133},
    {66, 64, 134}, {66, 65, 134}, {65, 66, 135}, {65, 68, 135}, {64, 69, 136}, {64, 70, 136},
    {63, 71, 136}, {63, 72, 137}, {62, 73, 137}, {62, 74, 137}, {62, 76, 138}, {61, 77, 138},
    {61, 78, 138}, {60, 79, 138}, {60, 80, 139}, {59, 81, 139}, {59, 82, 139}, {58, 83, 139},
    {58, 84, 140}, {57, 85, 140}, {57, 86, 140}, {56, 88, 140}, {56, 89, 140}, {55, 90, 140},
    {55, 91, 141}, {54, 92, 141}, {54, 93, 141}, {53, 94, 141}, {53, 95, 141}, {52, 96, 141},
    {52, 97, 141}, {51, 98, 141}, {51, 99, 141}, {50, 100, 142}, {50, 101, 142}, {49, 102, 142},
    {49, 103, 142}, {49, 104, 142}, {48, 105, 142}, {48, 106, 142}, {47, 107, 142}, {47, 108, 142},
    {46, 109, 142}, {46, 110, 142}, {46, 111, 142}, {45, 112, 142}, {45, 113, 142}, {44, 113, 142},
    {44, 114, 142}, {44, 115, 142}, {43, 116, 142}, {43, 117, 142}, {42, 118, 142}, {42, 119, 142},
    {42, 120, 142}, {41, 121, 142}, {41, 122, 142}, {41, 123, 142}, {40, 124, 142}, {40, 125, 142},
    {39, 126, 142}, {39, 127, 142}, {39, 128, 142}, {38, 129, 142}, {38, 130, 142}, {38, 130, 142},
    {37, 131, 142}, {37, 132, 142}, {37, 133, 142}, {36, 134, 142}, {36, 135, 142}, {35, 136, 142},
    {35, 137, 142}, {35, 138, 141}, {34, 139, 141}, {34, 140, 141}, {34, 141, 141}, {33, 142, 141},
    {33, 143, 141}, {33, 144, 141}, {33, 145, 140}, {32, 146, 140}, {32, 146, 140}, {32, 147, 140},
    {31, 148, 140}, {31, 149, 139}, {31, 150, 139}, {31, 151, 139}, {31, 152, 139}, {31, 153, 138},
    {31, 154, 138}, {30, 155, 138}, {30, 156, 137}, {30, 157, 137}, {31, 158, 137}, {31, 159, 136},
    {31, 160, 136}, {31, 161, 136}, {31, 161, 135}, {31, 162, 135}, {32, 163, 134}, {32, 164, 134},
    {33, 165, 133}, {33, 166, 133}, {34, 167, 133}, {34, 168, 132}, {35, 169, 131}, {36, 170, 131},
    {37, 171, 130}, {37, 172, 130}, {38, 173, 129}, {39, 173, 129}, {40, 174, 128}, {41, 175, 127},
    {42, 176, 127}, {44, 177, 126}, {45, 178, 125}, {46, 179, 124}, {47, 180, 124}, {49, 181, 123},
    {50, 182, 122}, {52, 182, 121}, {53, 183, 121}, {55, 184, 120}, {56, 185, 119}, {58, 186, 118},
    {59, 187, 117}, {61, 188, 116}, {63, 188, 115}, {64, 189, 114}, {66, 190, 113}, {68, 191, 112},
    {70, 192, 111}, {72, 193, 110}, {74, 193, 109}, {76, 194, 108}, {78, 195, 107}, {80, 196, 106},
    {82, 197, 105}, {84, 197, 104}, {86, 198, 103}, {88, 199, 101}, {90, 200, 100}, {92, 200, 99},
    {94, 201, 98}, {96, 202, 96}, {99, 203, 95}, {101, 203, 94}, {103, 204, 92}, {105, 205, 91},
    {108, 205, 90}, {110, 206, 88}, {112, 207, 87}, {115, 208, 86}, {117, 208, 84}, {119, 209, 83},
    {122, 209, 81}, {124, 210, 80}, {127, 211, 78}, {129, 211, 77}, {132, 212, 75}, {134, 213, 73},
    {137, 213, 72}, {139, 214, 70}, {142, 214, 69}, {144, 215, 67}, {147, 215, 65}, {149, 216, 64},
    {152, 216, 62}, {155, 217, 60}, {157, 217, 59}, {160, 218, 57}, {162, 218, 55}, {165, 219, 54},
    {168, 219, 52}, {170, 220, 50}, {173, 220, 48}, {176, 221, 47}, {178, 221, 45}, {181, 222, 43},
    {184, 222, 41}, {186, 222, 40}, {189, 223, 38}, {192, 223, 37}, {194, 223, 35}, {197, 224, 33},
    {200, 224, 32}, {202, 225, 31}, {205, 225, 29}, {208, 225, 28}, {210, 226, 27}, {213, 226, 26},
    {216, 226, 25}, {218, 227, 25}, {221, 227, 24}, {223, 227, 24}, {226, 228, 24}, {229, 228, 25},
    {231, 228, 25}, {234, 229, 26}, {236, 229, 27}, {239, 229, 28}, {241, 229, 29}, {244, 230, 30},
    {246, 230, 32}, {248, 230, 33}, {251, 231, 35}, {253, 231, 37},
}};

/// Blue (-1) through white (0) to red (+1).
inline Rgb diverging(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const double a = std::abs(v);
  const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - a)));
  return v >= 0.0 ? Rgb{255, fade, fade} : Rgb{fade, fade, 255};
}

enum class Heatmap { Intensity, RealPart };

/// Binary P6 image of a slice; first grid axis to the right, second up.
inline std::string heatmap_ppm(const ComplexField& f, Heatmap mode) {
  const auto& g = f.grid;
  if (g.rank != 2) throw Error(ErrorCode::InvalidArgument, "heatmaps need a 2D slice");
  const int w = g.n[0], h = g.n[1];
  double scale = 0.0;
  for (const auto& v : f.data) scale = std::max(scale, mode == Heatmap::Intensity ? std::norm(v) : std::abs(v.real()));
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t at = out.size();
  out.resize(at + static_cast<std::size_t>(w) * h * 3);
  for (int row = 0; row < h; ++row) {
    const int j = h - 1 - row;
    for (int i = 0; i < w; ++i) {
      const Complex v = f[static_cast<std::size_t>(i) * h + j];
      Rgb c;
      if (mode == Heatmap::Intensity) {
        const double s = scale > 0.0 ? std::sqrt(std::norm(v) / scale) : 0.0;  // gamma 0.5
        c = kViridis[std::min<long>(255, std::lround(255.0 * s))];
      } else {
        c = diverging(scale > 0.0 ? v.real() / scale : 0.0);
      }
      std::memcpy(&out[at + (static_cast<std::size_t>(row) * w + i) * 3], c.data(), 3);
    }
  }
  return out;
}

// -- digests ------------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) s += hex[md[i] >> 4], s += hex[md[i] & 15];
  return s;
}

}  // namespace vortex
