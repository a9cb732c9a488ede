#include "alcon/pgm.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "alcon/text.hpp"

namespace alcon {
namespace {

struct RawPgm {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void write_raw(const std::filesystem::path& path, const GridGeometry& g, const std::uint8_t* data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "P5\n" << g.width << ' ' << g.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(g.size()));
  if (!out) throw Error("write failed: " + path.string());

  std::ofstream hdr(sidecar_path(path));
  if (!hdr) throw Error("cannot open " + sidecar_path(path).string() + " for writing");
  hdr << "resolution=" << format_double(g.resolution) << " origin_x=" << format_double(g.origin.x)
      << " origin_y=" << format_double(g.origin.y) << '\n';
  if (!hdr) throw Error("write failed: " + sidecar_path(path).string());
}

std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int ch = in.peek();
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

RawPgm read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  if (next_token(in) != "P5") throw Error(path.string() + ": not a binary PGM");
  RawPgm raw;
  try {
    raw.width = std::stoi(next_token(in));
    raw.height = std::stoi(next_token(in));
    if (std::stoi(next_token(in)) != 255) throw Error(path.string() + ": maxval must be 255");
  } catch (const std::logic_error&) {
    throw Error(path.string() + ": malformed PGM header");
  }
  if (raw.width <= 0 || raw.height <= 0) throw Error(path.string() + ": bad dimensions");
  in.get();  // single whitespace after maxval
  raw.pixels.resize(static_cast<std::size_t>(raw.width) * raw.height);
  in.read(reinterpret_cast<char*>(raw.pixels.data()), static_cast<std::streamsize>(raw.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.pixels.size())) throw Error(path.string() + ": truncated pixel data");
  return raw;
}

GridGeometry read_geometry(const std::filesystem::path& pgm, int width, int height) {
  std::ifstream hdr(sidecar_path(pgm));
  if (!hdr) throw Error("missing sidecar " + sidecar_path(pgm).string());
  std::string line;
  std::getline(hdr, line);
  std::istringstream ss(line);
  GridGeometry g{width, height, 0.0, {}};
  bool have_res = false, have_x = false, have_y = false;
  std::string kv;
  while (ss >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(sidecar_path(pgm).string() + ": malformed entry '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const double value = parse_double(kv.substr(eq + 1), key);
    if (key == "resolution") g.resolution = value, have_res = true;
    else if (key == "origin_x") g.origin.x = value, have_x = true;
    else if (key == "origin_y") g.origin.y = value, have_y = true;
  }
  if (!have_res || !have_x || !have_y) throw Error(sidecar_path(pgm).string() + ": incomplete header");
  g.validate();
  return g;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& pgm) {
  auto p = pgm;
  p.replace_extension(".hdr");
  return p;
}

void write_score_pgm(const ScoreMap& map, const std::filesystem::path& path) {
  write_raw(path, map.geometry(), map.data().data());
}

ScoreMap read_score_pgm(const std::filesystem::path& path) {
  RawPgm raw = read_raw(path);
  ScoreMap map(read_geometry(path, raw.width, raw.height), 0);
  map.data() = std::move(raw.pixels);
  return map;
}

void write_occupancy_pgm(const OccupancyGrid& grid, const std::filesystem::path& path) {
  static_assert(sizeof(CellState) == 1);
  write_raw(path, grid.geometry(), reinterpret_cast<const std::uint8_t*>(grid.data().data()));
}

OccupancyGrid read_occupancy_pgm(const std::filesystem::path& path) {
  RawPgm raw = read_raw(path);
  OccupancyGrid grid(read_geometry(path, raw.width, raw.height), CellState::Unknown);
  for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
    switch (raw.pixels[i]) {
      case 0: grid[i] = CellState::Unknown; break;
      case 128: grid[i] = CellState::Free; break;
      case 255: grid[i] = CellState::Obstacle; break;
      default: throw Error(path.string() + ": invalid occupancy level " + std::to_string(raw.pixels[i]));
    }
  }
  return grid;
}

}  // namespace alcon
