#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tubekit/anchors.hpp"
#include "tubekit/geometry.hpp"
#include "tubekit/head.hpp"
#include "tubekit/metrics.hpp"
#include "tubekit/synthlab.hpp"

namespace tubekit {

// ---------------------------------------------------------------------------
// Locale-independent numeric text.

/// Shortest round-trip representation; re-serializing a parsed value
/// reproduces the exact bytes.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace ioerr {

[[noreturn]] inline void fail(const std::string& path, std::size_t line,
                              const std::string& message) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + message);
}

}  // namespace ioerr

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      ++i;
    }
    if (i > start) {
      tokens.push_back(line.substr(start, i - start));
    }
  }
  return tokens;
}

inline double parse_double(std::string_view t, const std::string& path,
                           std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    ioerr::fail(path, line, "bad number '" + std::string(t) + "'");
  }
  return v;
}

inline long parse_int(std::string_view t, const std::string& path,
                      std::size_t line) {
  long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    ioerr::fail(path, line, "bad integer '" + std::string(t) + "'");
  }
  return v;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw std::runtime_error(path + ": cannot open for reading");
  }
  return in;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw std::runtime_error(path + ": cannot open for writing");
  }
  return out;
}

// Explicit little-endian primitives.

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error(path + ": truncated file");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(bits));
  char b[8];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  }
  out.write(b, 8);
}

inline double get_f64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw std::runtime_error(path + ": truncated file");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline void check_magic(std::istream& in, const char (&magic)[5],
                        const std::string& path) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) {
    throw std::runtime_error(path + ": bad magic, not a " +
                             std::string(magic) + " file");
  }
}

constexpr std::uint32_t kEndianMarker = 0x01020304u;

}  // namespace detail

// ---------------------------------------------------------------------------
// Tube lines: the shared text format for annotations, tubelet detections and
// linked tubes. One record per line:
//   <video> <label> <score> <start_frame> <x1> <y1> <x2> <y2> ...

struct TubeLine {
  int video = 0;
  int label = 0;
  double score = 0.0;
  int start_frame = 0;
  std::vector<Box> boxes;
};

inline std::string to_text(const TubeLine& t) {
  std::string line = std::to_string(t.video) + " " + std::to_string(t.label) +
                     " " + format_double(t.score) + " " +
                     std::to_string(t.start_frame);
  for (const Box& b : t.boxes) {
    line += " " + format_double(b.x1) + " " + format_double(b.y1) + " " +
            format_double(b.x2) + " " + format_double(b.y2);
  }
  return line;
}

inline std::vector<TubeLine> read_tube_lines(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  std::vector<TubeLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') {
      continue;
    }
    if (tokens.size() < 8 || (tokens.size() - 4) % 4 != 0) {
      ioerr::fail(path, lineno, "expected 4 fields plus 4 coordinates per frame");
    }
    TubeLine t;
    t.video = static_cast<int>(detail::parse_int(tokens[0], path, lineno));
    t.label = static_cast<int>(detail::parse_int(tokens[1], path, lineno));
    t.score = detail::parse_double(tokens[2], path, lineno);
    t.start_frame =
        static_cast<int>(detail::parse_int(tokens[3], path, lineno));
    for (std::size_t i = 4; i + 3 < tokens.size(); i += 4) {
      t.boxes.push_back(Box{detail::parse_double(tokens[i], path, lineno),
                            detail::parse_double(tokens[i + 1], path, lineno),
                            detail::parse_double(tokens[i + 2], path, lineno),
                            detail::parse_double(tokens[i + 3], path, lineno)});
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline void write_tube_lines(const std::string& path,
                             const std::vector<TubeLine>& lines) {
  std::ofstream out = detail::open_out(path);
  for (const TubeLine& t : lines) {
    out << to_text(t) << "\n";
  }
}

inline TubeLine tube_to_line(int video, const ActionTube& tube) {
  return TubeLine{video, tube.label, tube.score, tube.start_frame, tube.boxes};
}

inline TubeRecord line_to_tube(const TubeLine& t) {
  return TubeRecord{t.video,
                    ActionTube{t.start_frame, t.boxes, t.label, t.score}};
}

// ---------------------------------------------------------------------------
// Feature files: binary, self-describing header, little-endian doubles.

struct FeatureFile {
  int stream = 0;  // 0 appearance, 1 motion
  std::vector<int> grid_sizes;
  int channels = 0;
  std::vector<FeatureVolume> frames;
};

inline void write_features(const std::string& path, int stream,
                           const std::vector<int>& grid_sizes, int channels,
                           const std::vector<FeatureVolume>& frames) {
  std::ofstream out = detail::open_out(path, true);
  out.write("TKFT", 4);
  detail::put_u32(out, 1);  // version
  detail::put_u32(out, detail::kEndianMarker);
  detail::put_u32(out, static_cast<std::uint32_t>(stream));
  detail::put_u32(out, static_cast<std::uint32_t>(frames.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid_sizes.size()));
  for (int g : grid_sizes) {
    detail::put_u32(out, static_cast<std::uint32_t>(g));
  }
  detail::put_u32(out, static_cast<std::uint32_t>(channels));
  for (const FeatureVolume& v : frames) {
    for (const std::vector<double>& grid : v.grids) {
      for (double x : grid) {
        detail::put_f64(out, x);
      }
    }
  }
}

inline FeatureFile read_features(const std::string& path) {
  std::ifstream in = detail::open_in(path, true);
  detail::check_magic(in, "TKFT", path);
  const std::uint32_t version = detail::get_u32(in, path);
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported feature file version");
  }
  if (detail::get_u32(in, path) != detail::kEndianMarker) {
    throw std::runtime_error(path + ": endianness mismatch");
  }
  FeatureFile f;
  f.stream = static_cast<int>(detail::get_u32(in, path));
  const std::uint32_t t = detail::get_u32(in, path);
  const std::uint32_t n_grids = detail::get_u32(in, path);
  for (std::uint32_t g = 0; g < n_grids; ++g) {
    f.grid_sizes.push_back(static_cast<int>(detail::get_u32(in, path)));
  }
  f.channels = static_cast<int>(detail::get_u32(in, path));
  for (std::uint32_t frame = 0; frame < t; ++frame) {
    FeatureVolume v;
    v.channels = f.channels;
    for (int g : f.grid_sizes) {
      std::vector<double> grid(static_cast<std::size_t>(g) * g * f.channels);
      for (double& x : grid) {
        x = detail::get_f64(in, path);
      }
      v.grids.push_back(std::move(grid));
    }
    f.frames.push_back(std::move(v));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Model files: binary, versioned, magic header, little-endian doubles.

inline void write_model(const std::string& path, const HeadParams& params) {
  std::ofstream out = detail::open_out(path, true);
  out.write("TKHD", 4);
  detail::put_u32(out, 1);  // version
  detail::put_u32(out, detail::kEndianMarker);
  detail::put_u32(out, static_cast<std::uint32_t>(params.k));
  detail::put_u32(out, static_cast<std::uint32_t>(params.num_classes));
  detail::put_u32(out, static_cast<std::uint32_t>(params.channels));
  detail::put_u32(out, static_cast<std::uint32_t>(params.grid_sizes.size()));
  for (int g : params.grid_sizes) {
    detail::put_u32(out, static_cast<std::uint32_t>(g));
  }
  for (const HeadParams::GridParams& g : params.grids) {
    for (const std::vector<double>* block :
         {&g.w_score, &g.b_score, &g.w_reg, &g.b_reg}) {
      for (double v : *block) {
        detail::put_f64(out, v);
      }
    }
  }
}

inline HeadParams read_model(const std::string& path) {
  std::ifstream in = detail::open_in(path, true);
  detail::check_magic(in, "TKHD", path);
  const std::uint32_t version = detail::get_u32(in, path);
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported model file version");
  }
  if (detail::get_u32(in, path) != detail::kEndianMarker) {
    throw std::runtime_error(path + ": endianness mismatch");
  }
  const int k = static_cast<int>(detail::get_u32(in, path));
  const int c = static_cast<int>(detail::get_u32(in, path));
  const int d = static_cast<int>(detail::get_u32(in, path));
  const std::uint32_t n_grids = detail::get_u32(in, path);
  std::vector<int> grids;
  for (std::uint32_t g = 0; g < n_grids; ++g) {
    grids.push_back(static_cast<int>(detail::get_u32(in, path)));
  }
  HeadParams params = HeadParams::zeros(k, c, d, grids);
  for (HeadParams::GridParams& g : params.grids) {
    for (std::vector<double>* block :
         {&g.w_score, &g.b_score, &g.w_reg, &g.b_reg}) {
      for (double& v : *block) {
        v = detail::get_f64(in, path);
      }
    }
  }
  return params;
}

// ---------------------------------------------------------------------------
// Dataset manifest.

struct VideoEntry {
  int id = 0;
  int frames = 0;
  std::string appearance_path;
  std::string motion_path;
  std::string annotation_path;
};

struct DatasetManifest {
  AnchorConfig anchors;  // carries image size, grids, scales, ratios and K
  int channels = 0;
  SignatureMode mode = SignatureMode::appearance;
  std::vector<std::string> class_names;  // class id = index + 1
  std::vector<VideoEntry> videos;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

inline void write_manifest(const std::string& path,
                           const DatasetManifest& m) {
  std::ofstream out = detail::open_out(path);
  out << "tubekit-dataset 1\n";
  out << "image_width " << format_double(m.anchors.image_width) << "\n";
  out << "image_height " << format_double(m.anchors.image_height) << "\n";
  out << "k " << m.anchors.k << "\n";
  out << "channels " << m.channels << "\n";
  out << "mode " << to_string(m.mode) << "\n";
  out << "classes";
  for (const std::string& name : m.class_names) {
    out << " " << name;
  }
  out << "\n";
  out << "grids";
  for (int g : m.anchors.grid_sizes) {
    out << " " << g;
  }
  out << "\n";
  out << "scales";
  for (double s : m.anchors.scales) {
    out << " " << format_double(s);
  }
  out << "\n";
  out << "ratios";
  for (double r : m.anchors.aspect_ratios) {
    out << " " << format_double(r);
  }
  out << "\n";
  out << "extra_square_anchor " << (m.anchors.extra_square_anchor ? 1 : 0)
      << "\n";
  for (const VideoEntry& v : m.videos) {
    out << "video " << v.id << " " << v.frames << " " << v.appearance_path
        << " " << v.motion_path << " " << v.annotation_path << "\n";
  }
}

inline DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  DatasetManifest m;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') {
      continue;
    }
    const std::string key(tokens[0]);
    if (!header_seen) {
      if (key != "tubekit-dataset") {
        ioerr::fail(path, lineno, "missing tubekit-dataset header");
      }
      header_seen = true;
      continue;
    }
    if (key == "image_width") {
      m.anchors.image_width = detail::parse_double(tokens.at(1), path, lineno);
    } else if (key == "image_height") {
      m.anchors.image_height = detail::parse_double(tokens.at(1), path, lineno);
    } else if (key == "k") {
      m.anchors.k = static_cast<int>(detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "channels") {
      m.channels = static_cast<int>(detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "mode") {
      m.mode = signature_mode_from_string(std::string(tokens.at(1)));
    } else if (key == "classes") {
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        m.class_names.emplace_back(tokens[i]);
      }
    } else if (key == "grids") {
      m.anchors.grid_sizes.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        m.anchors.grid_sizes.push_back(
            static_cast<int>(detail::parse_int(tokens[i], path, lineno)));
      }
    } else if (key == "scales") {
      m.anchors.scales.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        m.anchors.scales.push_back(detail::parse_double(tokens[i], path, lineno));
      }
    } else if (key == "ratios") {
      m.anchors.aspect_ratios.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        m.anchors.aspect_ratios.push_back(
            detail::parse_double(tokens[i], path, lineno));
      }
    } else if (key == "extra_square_anchor") {
      m.anchors.extra_square_anchor =
          detail::parse_int(tokens.at(1), path, lineno) != 0;
    } else if (key == "video") {
      if (tokens.size() != 6) {
        ioerr::fail(path, lineno, "video line needs id, frames and 3 paths");
      }
      m.videos.push_back(VideoEntry{
          static_cast<int>(detail::parse_int(tokens[1], path, lineno)),
          static_cast<int>(detail::parse_int(tokens[2], path, lineno)),
          std::string(tokens[3]), std::string(tokens[4]),
          std::string(tokens[5])});
    } else {
      ioerr::fail(path, lineno, "unknown manifest key '" + key + "'");
    }
  }
  if (!header_seen) {
    throw std::runtime_error(path + ": empty manifest");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Generation config: a key-value text file describing a whole dataset.

struct DatasetGenConfig {
  double image_width = 100.0;
  double image_height = 100.0;
  int frames = 0;
  int k = 6;
  int channels = 6;
  std::vector<int> grids;
  std::vector<double> scales;
  std::vector<double> ratios = {1.0};
  bool extra_square_anchor = false;
  std::vector<std::string> class_names;
  SignatureMode mode = SignatureMode::appearance;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int videos = 0;
  std::vector<std::pair<int, ActorSpec>> actors;  // (video index, actor)
};

inline DatasetGenConfig read_gen_config(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  DatasetGenConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') {
      continue;
    }
    const std::string key(tokens[0]);
    if (key == "image_width") {
      cfg.image_width = detail::parse_double(tokens.at(1), path, lineno);
    } else if (key == "image_height") {
      cfg.image_height = detail::parse_double(tokens.at(1), path, lineno);
    } else if (key == "frames") {
      cfg.frames = static_cast<int>(detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "k") {
      cfg.k = static_cast<int>(detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "channels") {
      cfg.channels = static_cast<int>(detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "grids") {
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        cfg.grids.push_back(
            static_cast<int>(detail::parse_int(tokens[i], path, lineno)));
      }
    } else if (key == "scales") {
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        cfg.scales.push_back(detail::parse_double(tokens[i], path, lineno));
      }
    } else if (key == "ratios") {
      cfg.ratios.clear();
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        cfg.ratios.push_back(detail::parse_double(tokens[i], path, lineno));
      }
    } else if (key == "extra_square_anchor") {
      cfg.extra_square_anchor =
          detail::parse_int(tokens.at(1), path, lineno) != 0;
    } else if (key == "classes") {
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        cfg.class_names.emplace_back(tokens[i]);
      }
    } else if (key == "mode") {
      cfg.mode = signature_mode_from_string(std::string(tokens.at(1)));
    } else if (key == "noise") {
      cfg.noise = detail::parse_double(tokens.at(1), path, lineno);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(
          detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "videos") {
      cfg.videos = static_cast<int>(detail::parse_int(tokens.at(1), path, lineno));
    } else if (key == "actor") {
      if (tokens.size() != 11 && tokens.size() != 13) {
        ioerr::fail(path, lineno,
                    "actor line needs video, label, box, velocity, extent "
                    "and optional drift");
      }
      ActorSpec a;
      const int video =
          static_cast<int>(detail::parse_int(tokens[1], path, lineno));
      a.label = static_cast<int>(detail::parse_int(tokens[2], path, lineno));
      a.start_box = Box{detail::parse_double(tokens[3], path, lineno),
                        detail::parse_double(tokens[4], path, lineno),
                        detail::parse_double(tokens[5], path, lineno),
                        detail::parse_double(tokens[6], path, lineno)};
      a.vx = detail::parse_double(tokens[7], path, lineno);
      a.vy = detail::parse_double(tokens[8], path, lineno);
      a.start_frame =
          static_cast<int>(detail::parse_int(tokens[9], path, lineno));
      a.end_frame =
          static_cast<int>(detail::parse_int(tokens[10], path, lineno));
      if (tokens.size() == 13) {
        a.dw = detail::parse_double(tokens[11], path, lineno);
        a.dh = detail::parse_double(tokens[12], path, lineno);
      }
      cfg.actors.emplace_back(video, a);
    } else {
      ioerr::fail(path, lineno, "unknown config key '" + key + "'");
    }
  }
  if (cfg.frames <= 0 || cfg.videos <= 0 || cfg.grids.empty()) {
    throw std::runtime_error(path + ": config needs frames, videos and grids");
  }
  if (cfg.grids.size() != cfg.scales.size()) {
    throw std::runtime_error(path + ": grids and scales differ in length");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Evaluation report.

struct EvalReport {
  MapResult frame_ap;  // at 0.5
  MapResult video_02;
  MapResult video_05;
  MapResult video_075;
  double video_avg = 0.0;  // 0.5:0.95
  double mabo_frame_level = 0.0;
  double mabo_video_level = 0.0;
  ClassificationAccuracy classification;
  ErrorBreakdown errors;
  SpeedMapResult speed;
};

inline void write_report(const std::string& path, const EvalReport& r,
                         const std::vector<std::string>& class_names) {
  std::ofstream out = detail::open_out(path);
  auto class_name = [&](int label) {
    return label >= 1 && label <= static_cast<int>(class_names.size())
               ? class_names[label - 1]
               : "class" + std::to_string(label);
  };
  out << "[frame_map]\n";
  out << "threshold 0.5\n";
  for (const PerClassValue& v : r.frame_ap.per_class) {
    out << "ap " << class_name(v.label) << " " << format_double(v.value)
        << "\n";
  }
  out << "map " << format_double(r.frame_ap.mean) << "\n\n";
  out << "[video_map]\n";
  out << "map@0.2 " << format_double(r.video_02.mean) << "\n";
  out << "map@0.5 " << format_double(r.video_05.mean) << "\n";
  out << "map@0.75 " << format_double(r.video_075.mean) << "\n";
  out << "map@0.5:0.95 " << format_double(r.video_avg) << "\n\n";
  out << "[mabo]\n";
  out << "frame_level " << format_double(r.mabo_frame_level) << "\n";
  out << "video_level " << format_double(r.mabo_video_level) << "\n\n";
  out << "[classification_accuracy]\n";
  out << "accuracy " << format_double(r.classification.accuracy) << "\n";
  out << "evaluated_boxes " << r.classification.evaluated << "\n";
  out << "total_boxes " << r.classification.total << "\n\n";
  out << "[error_breakdown]\n";
  out << "e_l " << format_double(r.errors.e_l) << "\n";
  out << "e_c " << format_double(r.errors.e_c) << "\n";
  out << "e_t " << format_double(r.errors.e_t) << "\n";
  out << "e_o " << format_double(r.errors.e_o) << "\n";
  out << "e_m " << format_double(r.errors.e_m) << "\n\n";
  out << "[speed_map]\n";
  out << "slow " << format_double(r.speed.slow) << "\n";
  out << "medium " << format_double(r.speed.medium) << "\n";
  out << "fast " << format_double(r.speed.fast) << "\n";
}

inline void write_report_tsv(const std::string& path, const EvalReport& r) {
  std::ofstream out = detail::open_out(path);
  out << "metric\tvalue\n";
  out << "frame_map@0.5\t" << format_double(r.frame_ap.mean) << "\n";
  for (const PerClassValue& v : r.frame_ap.per_class) {
    out << "frame_ap@0.5/class" << v.label << "\t" << format_double(v.value)
        << "\n";
  }
  out << "video_map@0.2\t" << format_double(r.video_02.mean) << "\n";
  out << "video_map@0.5\t" << format_double(r.video_05.mean) << "\n";
  out << "video_map@0.75\t" << format_double(r.video_075.mean) << "\n";
  out << "video_map@0.5:0.95\t" << format_double(r.video_avg) << "\n";
  out << "mabo_frame\t" << format_double(r.mabo_frame_level) << "\n";
  out << "mabo_video\t" << format_double(r.mabo_video_level) << "\n";
  out << "classification_accuracy\t" << format_double(r.classification.accuracy)
      << "\n";
  out << "e_l\t" << format_double(r.errors.e_l) << "\n";
  out << "e_c\t" << format_double(r.errors.e_c) << "\n";
  out << "e_t\t" << format_double(r.errors.e_t) << "\n";
  out << "e_o\t" << format_double(r.errors.e_o) << "\n";
  out << "e_m\t" << format_double(r.errors.e_m) << "\n";
  out << "speed_map_slow\t" << format_double(r.speed.slow) << "\n";
  out << "speed_map_medium\t" << format_double(r.speed.medium) << "\n";
  out << "speed_map_fast\t" << format_double(r.speed.fast) << "\n";
}

// ---------------------------------------------------------------------------
// Recall table and loss curve text output.

inline void write_recall_table(std::ostream& out, int k,
                               const RecallTable& table,
                               const std::vector<std::string>& class_names) {
  out << "# k " << k << "\n";
  out << "class";
  for (double t : table.thresholds) {
    out << "\t" << format_double(t);
  }
  out << "\n";
  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    const int label = table.classes[c];
    out << (label >= 1 && label <= static_cast<int>(class_names.size())
                ? class_names[label - 1]
                : "class" + std::to_string(label));
    for (double v : table.values[c]) {
      out << "\t" << format_double(v);
    }
    out << "\n";
  }
  out << "mean";
  for (double v : table.mean) {
    out << "\t" << format_double(v);
  }
  out << "\n";
}

inline void write_loss_curve(const std::string& path,
                             const std::vector<std::pair<int, double>>& curve) {
  std::ofstream out = detail::open_out(path);
  out << "step\tloss\n";
  for (const auto& [step, loss] : curve) {
    out << step << "\t" << format_double(loss) << "\n";
  }
}

}  // namespace tubekit
