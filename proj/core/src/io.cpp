#include "npmvs/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "npmvs/error.hpp"

namespace npmvs::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order, assumed little-endian");

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Whitespace tokenizer that remembers the line of each token.
class Tokens {
 public:
  Tokens(std::string_view text, std::string source) : source_(std::move(source)) {
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      tokens_.push_back({std::string(text.substr(start, i - start)), line});
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  int line() const { return done() ? (tokens_.empty() ? 1 : tokens_.back().line) : tokens_[pos_].line; }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::Parse, source_ + ":" + std::to_string(line()) + ": " + what);
  }

  const std::string& next(const char* expected) {
    if (done()) error(std::string("unexpected end of file, expected ") + expected);
    return tokens_[pos_++].text;
  }

  void expect(const std::string& word) {
    const std::string& t = next(word.c_str());
    if (t != word) {
      --pos_;
      error("expected '" + word + "', found '" + t + "'");
    }
  }

  double number(const char* what) {
    const std::string& t = next(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used == t.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    --pos_;
    error(std::string("expected ") + what + ", found '" + t + "'");
  }

  int integer(const char* what) {
    const double v = number(what);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
      --pos_;
      error(std::string("expected integer ") + what);
    }
    return static_cast<int>(v);
  }

  bool peek_line_is(int line) const { return !done() && tokens_[pos_].line == line; }

 private:
  struct Token {
    std::string text;
    int line;
  };
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string source_;
};

/// Cursor over a binary header: whitespace-separated ASCII fields followed by
/// a single whitespace byte and the payload.
class HeaderReader {
 public:
  HeaderReader(std::string_view bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::Parse, source_ + ": byte " + std::to_string(pos_) + ": " + what);
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string field(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ == start) error(std::string("missing ") + what);
    return std::string(bytes_.substr(start, pos_ - start));
  }

  double number(const char* what) {
    const std::size_t start = pos_;
    const std::string t = field(what);
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used == t.size()) return v;
    } catch (const std::exception&) {
    }
    pos_ = start;
    skip_space_and_comments();
    error(std::string("invalid ") + what + " '" + t + "'");
  }

  int positive_integer(const char* what) {
    const double v = number(what);
    if (v < 1 || v != std::floor(v) || v > 1 << 20) error(std::string("invalid ") + what);
    return static_cast<int>(v);
  }

  /// Consumes the single whitespace byte ending the header.
  std::string_view payload(std::size_t size) {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      error("expected a whitespace byte after the header");
    ++pos_;
    if (bytes_.size() - pos_ < size)
      error("payload truncated: need " + std::to_string(size) + " bytes, have " +
            std::to_string(bytes_.size() - pos_));
    return bytes_.substr(pos_, size);
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::string with_context(const fs::path& path) { return path.string(); }

}  // namespace

void atomic_write(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorKind::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "failed reading " + path.string());
  return os.str();
}

// ---------------------------------------------------------------- cam.txt

DepthRange CamFile::range() const {
  if (depth_max) return DepthRange{depth_min, *depth_max};
  const int count = depth_count.value_or(192);
  return DepthRange{depth_min, depth_min + (count - 1) * depth_interval};
}

CamFile parse_cam(std::string_view text, const std::string& source_name) {
  Tokens t(text, source_name);
  CamFile cam;
  t.expect("extrinsic");
  Eigen::Matrix4d e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) e(r, c) = t.number("extrinsic entry");
  t.expect("intrinsic");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cam.intrinsics(r, c) = t.number("intrinsic entry");
  cam.rotation = e.topLeftCorner<3, 3>();
  cam.translation = e.topRightCorner<3, 1>();
  const int depth_line = t.line();
  cam.depth_min = t.number("d_min");
  cam.depth_interval = t.number("d_interval");
  if (t.peek_line_is(depth_line)) cam.depth_count = t.integer("d_num");
  if (t.peek_line_is(depth_line)) cam.depth_max = t.number("d_max");
  if (!t.done()) t.error("unexpected trailing content");
  if (!(cam.depth_min > 0.0)) fail(ErrorKind::Parse, source_name + ": d_min must be positive");
  if (!cam.depth_max && cam.depth_count.value_or(192) < 2)
    fail(ErrorKind::Parse, source_name + ": d_num must be at least 2");
  return cam;
}

std::string format_cam(const CamFile& cam) {
  std::ostringstream os;
  os << "extrinsic\n";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) os << format_double(cam.rotation(r, c)) << ' ';
    os << format_double(cam.translation(r)) << '\n';
  }
  os << "0 0 0 1\n\nintrinsic\n";
  for (int r = 0; r < 3; ++r)
    os << format_double(cam.intrinsics(r, 0)) << ' ' << format_double(cam.intrinsics(r, 1))
       << ' ' << format_double(cam.intrinsics(r, 2)) << '\n';
  os << '\n' << format_double(cam.depth_min) << ' ' << format_double(cam.depth_interval);
  if (cam.depth_count) {
    os << ' ' << *cam.depth_count;
    if (cam.depth_max) os << ' ' << format_double(*cam.depth_max);
  }
  os << '\n';
  return os.str();
}

CamFile read_cam(const fs::path& path) { return parse_cam(read_file(path), with_context(path)); }

void write_cam(const fs::path& path, const CamFile& cam) { atomic_write(path, format_cam(cam)); }

// ---------------------------------------------------------------- PFM

DepthMap parse_pfm(std::string_view bytes, const std::string& source_name) {
  HeaderReader h(bytes, source_name);
  const std::string magic = h.field("magic");
  if (magic == "PF") h.error("three-channel PFM is not a depth map");
  if (magic != "Pf") h.error("not a PFM file (magic '" + magic + "')");
  const int w = h.positive_integer("width");
  const int ht = h.positive_integer("height");
  const double scale = h.number("scale");
  if (scale == 0.0 || !std::isfinite(scale)) h.error("invalid scale");
  const bool little = scale < 0.0;
  const std::size_t n = static_cast<std::size_t>(w) * ht;
  const std::string_view data = h.payload(n * 4);
  DepthMap depth(w, ht, 1, 0.0);
  for (int row = 0; row < ht; ++row)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(row) * w + x;
      unsigned char b[4];
      std::memcpy(b, data.data() + i * 4, 4);
      if (!little) std::reverse(b, b + 4);
      float f;
      std::memcpy(&f, b, 4);
      depth(x, ht - 1 - row) = std::isnan(f) ? std::numeric_limits<double>::quiet_NaN() : f;
    }
  return depth;
}

std::string format_pfm(const DepthMap& depth) {
  std::ostringstream os;
  os << "Pf\n" << depth.width() << ' ' << depth.height() << "\n-1\n";
  std::string out = os.str();
  const std::size_t header = out.size();
  out.resize(header + depth.pixels() * 4);
  for (int row = 0; row < depth.height(); ++row)
    for (int x = 0; x < depth.width(); ++x) {
      const float f = static_cast<float>(depth(x, depth.height() - 1 - row));
      std::memcpy(out.data() + header + (static_cast<std::size_t>(row) * depth.width() + x) * 4,
                  &f, 4);
    }
  return out;
}

DepthMap read_pfm(const fs::path& path) { return parse_pfm(read_file(path), with_context(path)); }

void write_pfm(const fs::path& path, const DepthMap& depth) {
  atomic_write(path, format_pfm(depth));
}

// ---------------------------------------------------------------- PGM / PPM

Image parse_pnm(std::string_view bytes, const std::string& source_name) {
  HeaderReader h(bytes, source_name);
  const std::string magic = h.field("magic");
  if (magic != "P5" && magic != "P6") h.error("unsupported image type '" + magic + "'");
  const int channels = magic == "P5" ? 1 : 3;
  const int w = h.positive_integer("width");
  const int ht = h.positive_integer("height");
  const int maxval = h.positive_integer("maxval");
  if (maxval > 255) h.error("only 8-bit images are supported");
  const std::size_t n = static_cast<std::size_t>(w) * ht * channels;
  const std::string_view data = h.payload(n);
  Grid<double> raw(w, ht, channels, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    raw.data()[i] = static_cast<unsigned char>(data[i]) / static_cast<double>(maxval);
  return channels == 1 ? raw : to_luma(raw);
}

std::string format_pgm(const Image& image) {
  require(image.channels() == 1, "PGM output needs a single-channel image");
  std::ostringstream os;
  os << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::string out = os.str();
  for (double v : image.data())
    out.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

Image read_image(const fs::path& path) { return parse_pnm(read_file(path), with_context(path)); }

void write_pgm(const fs::path& path, const Image& image) { atomic_write(path, format_pgm(image)); }

// ---------------------------------------------------------------- PLY

std::string format_ply(const PointCloud& cloud) {
  const bool colored = cloud.colors.size() == cloud.points.size();
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size()
     << "\nproperty double x\nproperty double y\nproperty double z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const std::array<std::uint8_t, 3> c =
        colored ? cloud.colors[i] : std::array<std::uint8_t, 3>{255, 255, 255};
    os << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int(c[0]) << ' ' << int(c[1]) << ' '
       << int(c[2]) << '\n';
  }
  return os.str();
}

PointCloud parse_ply(std::string_view text, const std::string& source_name) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto error = [&](const std::string& what) -> void {
    fail(ErrorKind::Parse, source_name + ":" + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() {
    if (!std::getline(in, line)) error("unexpected end of file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") error("missing 'ply' magic");
  std::size_t count = 0;
  std::vector<std::string> properties;
  bool in_vertex = false;
  bool seen_vertex = false;
  for (;;) {
    next_line();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii") error("only ASCII PLY is supported");
    } else if (word == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (seen_vertex) error("duplicate vertex element");
        seen_vertex = true;
        if (!(ls >> count)) error("invalid vertex count");
      } else if (!seen_vertex) {
        error("elements before 'vertex' are not supported");
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      if (type == "list") error("list properties on vertices are not supported");
      properties.push_back(name);
    }
  }
  auto find = [&](const char* name) -> int {
    const auto it = std::find(properties.begin(), properties.end(), name);
    return it == properties.end() ? -1 : static_cast<int>(it - properties.begin());
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  const int ir = find("red"), ig = find("green"), ib = find("blue");
  if (ix < 0 || iy < 0 || iz < 0) error("vertex element lacks x, y or z");
  const bool colored = ir >= 0 && ig >= 0 && ib >= 0;
  PointCloud cloud;
  cloud.points.reserve(count);
  std::vector<double> values(properties.size());
  for (std::size_t i = 0; i < count; ++i) {
    next_line();
    std::istringstream ls(line);
    for (double& v : values)
      if (!(ls >> v)) error("vertex " + std::to_string(i) + " has too few values");
    const Vec3 p(values[ix], values[iy], values[iz]);
    if (!p.allFinite()) error("vertex " + std::to_string(i) + " is not finite");
    cloud.points.push_back(p);
    if (colored)
      cloud.colors.push_back({static_cast<std::uint8_t>(values[ir]),
                              static_cast<std::uint8_t>(values[ig]),
                              static_cast<std::uint8_t>(values[ib])});
  }
  return cloud;
}

PointCloud read_ply(const fs::path& path) { return parse_ply(read_file(path), with_context(path)); }

void write_ply(const fs::path& path, const PointCloud& cloud) {
  atomic_write(path, format_ply(cloud));
}

// ---------------------------------------------------------------- level dumps

namespace {

constexpr char kLevelMagic[8] = {'N', 'P', 'M', 'V', 'S', 'L', 'V', '1'};

template <typename T>
void put(std::string& out, const T& v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

class ByteReader {
 public:
  ByteReader(std::string_view bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      fail(ErrorKind::Parse, source_ + ": byte " + std::to_string(pos_) + ": truncated");
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  const std::string& source_;
};

}  // namespace

std::string format_level(const LevelOutput& level) {
  const HypothesisSet& h = level.hypotheses;
  const ProbabilityVolume& p = level.probabilities;
  require(p.width() == h.width && p.height() == h.height && p.samples() == h.samples,
          "probabilities do not match the hypotheses");
  std::string out(kLevelMagic, sizeof(kLevelMagic));
  put<std::int32_t>(out, h.level);
  put<std::int32_t>(out, h.width);
  put<std::int32_t>(out, h.height);
  put<std::int32_t>(out, h.samples);
  put<double>(out, h.interval);
  for (double d : h.depths) put<double>(out, d);
  for (int y = 0; y < h.height; ++y)
    for (int x = 0; x < h.width; ++x)
      for (double v : p.probs(x, y)) put<double>(out, v);
  for (int y = 0; y < h.height; ++y)
    for (int x = 0; x < h.width; ++x) out.push_back(p.valid(x, y) ? 1 : 0);
  return out;
}

LevelOutput parse_level(std::string_view bytes, const std::string& source_name) {
  ByteReader r(bytes, source_name);
  r.need(sizeof(kLevelMagic));
  if (bytes.substr(0, sizeof(kLevelMagic)) != std::string_view(kLevelMagic, sizeof(kLevelMagic)))
    fail(ErrorKind::Parse, source_name + ": byte 0: not a level dump");
  for (std::size_t i = 0; i < sizeof(kLevelMagic); ++i) (void)r.get<char>();
  const int level = r.get<std::int32_t>();
  const int w = r.get<std::int32_t>();
  const int h = r.get<std::int32_t>();
  const int m = r.get<std::int32_t>();
  const double interval = r.get<double>();
  if (level < 0 || w < 1 || h < 1 || m < 1 || w > 1 << 16 || h > 1 << 16 || m > 1 << 16)
    fail(ErrorKind::Parse, source_name + ": byte 8: invalid level dimensions");
  const std::size_t cells = static_cast<std::size_t>(w) * h * m;
  const std::size_t pixels = static_cast<std::size_t>(w) * h;
  if (r.remaining() != cells * 16 + pixels)
    fail(ErrorKind::Parse, source_name + ": byte " + std::to_string(r.pos()) +
                               ": payload size does not match the header");
  LevelOutput out{HypothesisSet(level, w, h, m, interval), ProbabilityVolume(w, h, m)};
  for (double& d : out.hypotheses.depths) d = r.get<double>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (double& v : out.probabilities.probs(x, y)) v = r.get<double>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.probabilities.set_valid(x, y, r.get<char>() != 0);
  return out;
}

// ---------------------------------------------------------------- scenes

std::string view_name(int index) {
  std::ostringstream os;
  os << std::setw(8) << std::setfill('0') << index;
  return os.str();
}

namespace {

CamFile cam_file_for(const SceneView& v) {
  CamFile c;
  c.intrinsics = v.camera.intrinsics;
  c.rotation = v.camera.rotation;
  c.translation = v.camera.translation;
  c.depth_min = v.range.min;
  c.depth_count = 192;
  c.depth_interval = (v.range.max - v.range.min) / 191.0;
  c.depth_max = v.range.max;
  return c;
}

}  // namespace

SceneBundle load_scene(const fs::path& directory) {
  const fs::path images = directory / "images";
  if (!fs::is_directory(images))
    fail(ErrorKind::Io, "scene directory " + directory.string() + " has no images/ folder");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::Io, "no .pgm or .ppm images in " + images.string());

  SceneBundle scene;
  for (const fs::path& file : files) {
    const std::string stem = file.stem().string();
    SceneView view;
    view.image = read_image(file);
    const fs::path cam_path = directory / "cams" / (stem + "_cam.txt");
    if (!fs::exists(cam_path))
      fail(ErrorKind::Io, "view " + stem + ": missing camera file " + cam_path.string());
    const CamFile cam = read_cam(cam_path);
    view.camera.intrinsics = cam.intrinsics;
    view.camera.rotation = cam.rotation;
    view.camera.translation = cam.translation;
    view.camera.width = view.image.width();
    view.camera.height = view.image.height();
    view.range = cam.range();
    const fs::path depth_path = directory / "depths" / (stem + ".pfm");
    if (fs::exists(depth_path)) view.gt_depth = read_pfm(depth_path);
    scene.views.push_back(std::move(view));
  }
  scene.validate();
  return scene;
}

void save_scene(const SceneBundle& scene, const fs::path& directory) {
  scene.validate();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const SceneView& v = scene.views[i];
    const std::string name = view_name(static_cast<int>(i));
    write_pgm(directory / "images" / (name + ".pgm"), v.image);
    write_cam(directory / "cams" / (name + "_cam.txt"), cam_file_for(v));
    if (v.gt_depth) write_pfm(directory / "depths" / (name + ".pfm"), *v.gt_depth);
  }
}

void save_inference(const SceneBundle& scene, std::span<const InferenceResult> results,
                    const PipelineConfig& config, const fs::path& directory) {
  for (const InferenceResult& r : results) {
    require(r.reference >= 0 && r.reference < static_cast<int>(scene.size()),
            "inference result refers to an unknown view");
    const SceneView& v = scene.views[r.reference];
    const std::string name = view_name(r.reference);
    write_pfm(directory / "depths" / (name + ".pfm"), r.depth);
    write_cam(directory / "cams" / (name + "_cam.txt"), cam_file_for(v));
    write_pgm(directory / "images" / (name + ".pgm"), v.image);
    for (const LevelOutput& level : r.levels)
      atomic_write(directory / "levels" /
                       (name + "_l" + std::to_string(level.hypotheses.level) + ".bin"),
                   format_level(level));
  }
  atomic_write(directory / "config.json", config.to_json());
}

}  // namespace npmvs::io
