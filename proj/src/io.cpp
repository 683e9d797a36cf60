#include "ltaf/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ltaf/denoiser.hpp"
#include "ltaf/errors.hpp"
#include "ltaf/vae.hpp"

namespace ltaf {
namespace {

constexpr char kMagic[4] = {'L', 'T', 'A', 'F'};
constexpr std::uint8_t kDtypeF32 = 0;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const std::uint8_t* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("tensor container is truncated");
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::vector<std::uint8_t> serialize_container(const std::vector<NamedTensor>& entries) {
  std::set<std::string> names;
  std::size_t header = 12;
  for (const auto& e : entries) {
    if (e.name.empty()) throw FormatError("tensor names must be non-empty");
    if (!names.insert(e.name).second) throw FormatError("duplicate tensor name '" + e.name + "'");
    header += 4 + e.name.size() + 1 + 4 + 4 * e.tensor.shape().size() + 16;
  }
  Writer w;
  w.raw(kMagic, 4);
  w.u32(container_version);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  std::uint64_t offset = header;
  for (const auto& e : entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u8(kDtypeF32);
    w.u32(static_cast<std::uint32_t>(e.tensor.shape().size()));
    for (int d : e.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    const std::uint64_t length = 4 * static_cast<std::uint64_t>(e.tensor.size());
    w.u64(offset);
    w.u64(length);
    offset += length;
  }
  for (const auto& e : entries) {
    for (float v : e.tensor.values()) w.u32(float_bits(v));
  }
  return std::move(w.bytes);
}

std::vector<NamedTensor> parse_container(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(r.take(4), kMagic, 4) != 0) {
    throw FormatError("not a tensor container (bad magic bytes)");
  }
  const std::uint32_t version = r.u32();
  if (version != container_version) {
    throw FormatError("unsupported container version " + std::to_string(version) + " (expected " +
                      std::to_string(container_version) + ")");
  }
  const std::uint32_t count = r.u32();

  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset;
    std::uint64_t length;
  };
  std::vector<Entry> table;
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const std::uint32_t name_len = r.u32();
    const std::uint8_t* name = r.take(name_len);
    e.name.assign(reinterpret_cast<const char*>(name), name_len);
    if (e.name.empty()) throw FormatError("tensor entry " + std::to_string(i) + " has an empty name");
    if (!names.insert(e.name).second) throw FormatError("duplicate tensor name '" + e.name + "'");
    const std::uint8_t dtype = r.u8();
    if (dtype != kDtypeF32) throw FormatError("tensor '" + e.name + "' has unsupported dtype " + std::to_string(dtype));
    const std::uint32_t rank = r.u32();
    std::uint64_t elements = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const std::uint32_t d = r.u32();
      if (d > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
        throw FormatError("tensor '" + e.name + "' has an oversized dimension");
      }
      e.shape.push_back(static_cast<int>(d));
      elements *= d;
      if (elements > bytes.size()) throw FormatError("tensor '" + e.name + "' is larger than the file");
    }
    e.offset = r.u64();
    e.length = r.u64();
    if (e.length != 4 * elements) {
      throw FormatError("tensor '" + e.name + "' declares " + std::to_string(e.length) + " bytes but its shape needs " +
                        std::to_string(4 * elements));
    }
    table.push_back(std::move(e));
  }

  const std::uint64_t header_end = r.position();
  std::vector<const Entry*> by_offset;
  for (const auto& e : table) {
    if (e.offset < header_end || e.offset > bytes.size() || e.length > bytes.size() - e.offset) {
      throw FormatError("tensor '" + e.name + "' lies outside the payload (file truncated?)");
    }
    by_offset.push_back(&e);
  }
  std::sort(by_offset.begin(), by_offset.end(), [](const Entry* a, const Entry* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < by_offset.size(); ++i) {
    if (by_offset[i - 1]->offset + by_offset[i - 1]->length > by_offset[i]->offset) {
      throw FormatError("tensors '" + by_offset[i - 1]->name + "' and '" + by_offset[i]->name + "' overlap");
    }
  }

  std::vector<NamedTensor> out;
  out.reserve(table.size());
  for (const auto& e : table) {
    Tensor t(e.shape);
    const std::uint8_t* p = bytes.data() + e.offset;
    for (std::size_t i = 0; i < t.size(); ++i, p += 4) {
      const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                                 static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
      t[i] = std::bit_cast<float>(bits);
    }
    out.push_back({e.name, std::move(t)});
  }
  return out;
}

void save_container(const fs::path& path, const std::vector<NamedTensor>& entries) {
  write_file(path, serialize_container(entries));
}

std::vector<NamedTensor> load_container(const fs::path& path) { return parse_container(read_file(path)); }

namespace {

constexpr float kKindVae = 1.0f;
constexpr float kKindDenoiser = 2.0f;

NamedTensor scalar(const std::string& name, float v) { return {name, Tensor({1}, v)}; }

std::vector<NamedTensor> with_params(std::vector<NamedTensor> meta, const nn::ParameterStore& store) {
  for (const auto& [name, var] : store.entries()) meta.push_back({name, var->value});
  return meta;
}

struct LoadedWeights {
  std::map<std::string, float> meta;
  std::map<std::string, Tensor> params;
};

LoadedWeights split(std::vector<NamedTensor> entries, const fs::path& path) {
  LoadedWeights w;
  for (auto& e : entries) {
    if (e.name.rfind("meta.", 0) == 0) {
      if (e.tensor.size() != 1) throw FormatError(path.string() + ": metadata '" + e.name + "' is not a scalar");
      w.meta[e.name] = e.tensor[0];
    } else {
      w.params.emplace(e.name, std::move(e.tensor));
    }
  }
  return w;
}

float meta_value(const LoadedWeights& w, const std::string& key, const fs::path& path) {
  auto it = w.meta.find("meta." + key);
  if (it == w.meta.end()) throw FormatError(path.string() + ": missing tensor 'meta." + key + "'");
  return it->second;
}

int meta_int(const LoadedWeights& w, const std::string& key, const fs::path& path) {
  const float v = meta_value(w, key, path);
  if (v != std::floor(v) || v < 0.0f || v > 1e6f) {
    throw FormatError(path.string() + ": metadata '" + key + "' is not a valid integer");
  }
  return static_cast<int>(v);
}

void require_kind(const LoadedWeights& w, float kind, const char* what, const fs::path& path) {
  if (meta_value(w, "kind", path) != kind) throw FormatError(path.string() + " does not hold " + what + " weights");
}

void assign_exact(nn::ParameterStore& store, const LoadedWeights& w, const fs::path& path) {
  for (const auto& [name, tensor] : w.params) {
    if (!store.find(name)) throw FormatError(path.string() + ": unexpected tensor '" + name + "'");
  }
  try {
    store.assign(w.params);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_weights(const VaeModel& m, const fs::path& path) {
  if (!m.initialized()) throw std::logic_error("cannot save an uninitialized VAE");
  const VaeConfig& c = m.config();
  save_container(path, with_params({scalar("meta.kind", kKindVae), scalar("meta.downsample", c.downsample),
                                    scalar("meta.latent_channels", c.latent_channels),
                                    scalar("meta.base_width", c.base_width),
                                    scalar("meta.latent_scale", m.latent_scale())},
                                   m.parameters()));
}

void save_weights(const DenoiserModel& m, const fs::path& path) {
  if (!m.initialized()) throw std::logic_error("cannot save an uninitialized denoiser");
  const DenoiserConfig& c = m.config();
  save_container(path, with_params({scalar("meta.kind", kKindDenoiser), scalar("meta.channels", c.channels),
                                    scalar("meta.base_width", c.base_width), scalar("meta.time_dim", c.time_dim)},
                                   m.parameters()));
}

VaeModel load_vae(const fs::path& path) {
  const LoadedWeights w = split(load_container(path), path);
  require_kind(w, kKindVae, "VAE", path);
  VaeConfig c;
  c.downsample = meta_int(w, "downsample", path);
  c.latent_channels = meta_int(w, "latent_channels", path);
  c.base_width = meta_int(w, "base_width", path);
  VaeModel m(c);
  assign_exact(m.parameters(), w, path);
  m.set_latent_scale(meta_value(w, "latent_scale", path));
  return m;
}

DenoiserModel load_denoiser(const fs::path& path) {
  const LoadedWeights w = split(load_container(path), path);
  require_kind(w, kKindDenoiser, "denoiser", path);
  DenoiserConfig c;
  c.channels = meta_int(w, "channels", path);
  c.base_width = meta_int(w, "base_width", path);
  c.time_dim = meta_int(w, "time_dim", path);
  DenoiserModel m(c);
  assign_exact(m.parameters(), w, path);
  return m;
}

namespace {

struct PngImage {
  png_image img{};
  PngImage() {
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

std::uint8_t quantize(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

// Reads as `format`; returns the file's original format flags through `original`.
std::vector<std::uint8_t> read_png(const fs::path& path, png_uint_32 format, int& height, int& width,
                                   png_uint_32& original) {
  PngImage p;
  if (!png_image_begin_read_from_file(&p.img, path.string().c_str())) {
    throw FormatError(path.string() + ": " + p.img.message);
  }
  original = p.img.format;
  p.img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(p.img));
  if (!png_image_finish_read(&p.img, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + p.img.message);
  }
  height = static_cast<int>(p.img.height);
  width = static_cast<int>(p.img.width);
  return buf;
}

void write_png(const fs::path& path, png_uint_32 format, int height, int width, const std::vector<std::uint8_t>& buf) {
  PngImage p;
  p.img.format = format;
  p.img.height = static_cast<png_uint_32>(height);
  p.img.width = static_cast<png_uint_32>(width);
  if (!png_image_write_to_file(&p.img, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw std::runtime_error(path.string() + ": " + p.img.message);
  }
}

bool is_rgb8(png_uint_32 format) {
  return (format & PNG_FORMAT_FLAG_COLOR) && !(format & PNG_FORMAT_FLAG_ALPHA) && !(format & PNG_FORMAT_FLAG_LINEAR);
}

}  // namespace

Image load_png(const fs::path& path) {
  int h = 0;
  int w = 0;
  png_uint_32 original = 0;
  const auto buf = read_png(path, PNG_FORMAT_RGB, h, w, original);
  if (!is_rgb8(original)) throw FormatError(path.string() + " is not an 8-bit RGB PNG");
  Image img(h, w);
  for (std::size_t i = 0; i < buf.size(); ++i) img.pixels[i] = static_cast<float>(buf[i]) / 255.0f;
  return img;
}

void save_png(const Image& img, const fs::path& path) {
  std::vector<std::uint8_t> buf(img.pixels.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize(img.pixels[i]);
  write_png(path, PNG_FORMAT_RGB, img.height, img.width, buf);
}

PixelMask load_mask_png(const fs::path& path) {
  int h = 0;
  int w = 0;
  png_uint_32 original = 0;
  const auto buf = read_png(path, PNG_FORMAT_GRAY, h, w, original);
  PixelMask m(h, w);
  for (std::size_t i = 0; i < buf.size(); ++i) m.artifact[i] = buf[i] > 127 ? 1 : 0;
  return m;
}

void save_mask_png(const PixelMask& m, const fs::path& path) {
  std::vector<std::uint8_t> buf(m.artifact.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = m.artifact[i] ? 255 : 0;
  write_png(path, PNG_FORMAT_GRAY, m.height, m.width, buf);
}

ImageSet load_image_dir(const fs::path& dir, bool strict) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  ImageSet set;
  for (const auto& f : files) {
    try {
      Image img = load_png(f);
      if (!set.images.empty() && !img.same_size(set.images.front())) {
        throw ShapeError(dir.string() + ": " + f.filename().string() + " is " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " but earlier images are " +
                         std::to_string(set.images.front().height) + "x" + std::to_string(set.images.front().width));
      }
      set.paths.push_back(f);
      set.images.push_back(std::move(img));
    } catch (const FormatError& e) {
      if (strict) throw;
      set.skipped.push_back(e.what());
    }
  }
  if (set.images.empty()) throw std::runtime_error(dir.string() + " contains no usable PNG images");
  return set;
}

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}
}  // namespace

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected clean_path,artifact_path,mask_path");
    }
    out.push_back({resolve(base, fields[0]), resolve(base, fields[1]), resolve(base, fields[2])});
  }
  if (out.empty()) throw FormatError("manifest " + path.string() + " lists no images");
  return out;
}

void save_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# clean_path,artifact_path,mask_path\n";
  for (const auto& e : entries) out << e.clean.string() << ',' << e.artifact.string() << ',' << e.mask.string() << '\n';
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  return v;
}

int parse_positive(const std::string& key, const std::string& value) {
  const int v = parse_number<int>(key, value);
  if (v <= 0) throw ConfigError("key '" + key + "' must be positive, got " + value);
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  const double v = parse_number<double>(key, value);
  if (!std::isfinite(v)) throw ConfigError("key '" + key + "' must be finite");
  return v;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_existing(const std::string& key, const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("key '" + key + "': " + p.string() + " does not exist");
}

void require_writable_parent(const std::string& key, const fs::path& p) {
  if (fs::exists(p)) return;
  const fs::path parent = p.parent_path().empty() ? fs::path(".") : p.parent_path();
  if (!fs::is_directory(parent)) {
    throw ConfigError("key '" + key + "': directory " + parent.string() + " does not exist");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto int_key = [](int RunConfig::*field, RunConfig& c) {
    return Setter([&c, field](const std::string& k, const std::string& v) { c.*field = parse_positive(k, v); });
  };
  auto real_key = [](double RunConfig::*field, RunConfig& c) {
    return Setter([&c, field](const std::string& k, const std::string& v) { c.*field = parse_real(k, v); });
  };
  auto input_path = [&](std::optional<fs::path> RunConfig::*field) {
    return Setter([&, field](const std::string& k, const std::string& v) {
      cfg.*field = resolve(base_dir, v);
      require_existing(k, *(cfg.*field));
    });
  };
  auto weight_path = [&](std::optional<fs::path> RunConfig::*field) {
    return Setter([&, field](const std::string& k, const std::string& v) {
      cfg.*field = resolve(base_dir, v);
      require_writable_parent(k, *(cfg.*field));
    });
  };
  const std::map<std::string, Setter> setters = {
      {"steps", int_key(&RunConfig::steps, cfg)},
      {"beta_start", real_key(&RunConfig::beta_start, cfg)},
      {"beta_end", real_key(&RunConfig::beta_end, cfg)},
      {"pixel_steps", int_key(&RunConfig::pixel_steps, cfg)},
      {"downsample", int_key(&RunConfig::downsample, cfg)},
      {"latent_channels", int_key(&RunConfig::latent_channels, cfg)},
      {"vae_width", int_key(&RunConfig::vae_width, cfg)},
      {"denoiser_width", int_key(&RunConfig::denoiser_width, cfg)},
      {"time_dim", int_key(&RunConfig::time_dim, cfg)},
      {"vae_epochs", int_key(&RunConfig::vae_epochs, cfg)},
      {"denoiser_epochs", int_key(&RunConfig::denoiser_epochs, cfg)},
      {"pixel_epochs", int_key(&RunConfig::pixel_epochs, cfg)},
      {"batch", int_key(&RunConfig::batch, cfg)},
      {"lr", real_key(&RunConfig::lr, cfg)},
      {"kl_weight", real_key(&RunConfig::kl_weight, cfg)},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
      {"tiles", int_key(&RunConfig::tiles, cfg)},
      {"tile_size", int_key(&RunConfig::tile_size, cfg)},
      {"bench_images", int_key(&RunConfig::bench_images, cfg)},
      {"data_dir", input_path(&RunConfig::data_dir)},
      {"manifest", input_path(&RunConfig::manifest)},
      {"restored_dir", input_path(&RunConfig::restored_dir)},
      {"vae_weights", weight_path(&RunConfig::vae_weights)},
      {"denoiser_weights", weight_path(&RunConfig::denoiser_weights)},
      {"pixel_weights", weight_path(&RunConfig::pixel_weights)},
  };

  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' has no value");
    it->second(key, value);
  }

  if (!(cfg.beta_start > 0.0 && cfg.beta_start <= cfg.beta_end && cfg.beta_end < 1.0)) {
    throw ConfigError("beta range must satisfy 0 < beta_start <= beta_end < 1");
  }
  if (cfg.downsample != 4 && cfg.downsample != 8) throw ConfigError("downsample must be 4 or 8");
  if (cfg.tile_size % 8 != 0) throw ConfigError("tile_size must be a multiple of 8");
  if (cfg.time_dim % 2 != 0) throw ConfigError("time_dim must be even");
  if (!(cfg.lr > 0.0)) throw ConfigError("lr must be positive");
  if (cfg.kl_weight < 0.0) throw ConfigError("kl_weight must be non-negative");
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string to_string(const RunConfig& c) {
  std::ostringstream o;
  auto path_or_empty = [](const std::optional<fs::path>& p) { return p ? p->string() : std::string(); };
  o << "steps=" << c.steps << '\n'
    << "beta_start=" << fmt_real(c.beta_start) << '\n'
    << "beta_end=" << fmt_real(c.beta_end) << '\n'
    << "pixel_steps=" << c.pixel_steps << '\n'
    << "downsample=" << c.downsample << '\n'
    << "latent_channels=" << c.latent_channels << '\n'
    << "vae_width=" << c.vae_width << '\n'
    << "denoiser_width=" << c.denoiser_width << '\n'
    << "time_dim=" << c.time_dim << '\n'
    << "vae_epochs=" << c.vae_epochs << '\n'
    << "denoiser_epochs=" << c.denoiser_epochs << '\n'
    << "pixel_epochs=" << c.pixel_epochs << '\n'
    << "batch=" << c.batch << '\n'
    << "lr=" << fmt_real(c.lr) << '\n'
    << "kl_weight=" << fmt_real(c.kl_weight) << '\n'
    << "seed=" << (c.seed ? std::to_string(*c.seed) : std::string()) << '\n'
    << "tiles=" << c.tiles << '\n'
    << "tile_size=" << c.tile_size << '\n'
    << "bench_images=" << c.bench_images << '\n'
    << "data_dir=" << path_or_empty(c.data_dir) << '\n'
    << "manifest=" << path_or_empty(c.manifest) << '\n'
    << "restored_dir=" << path_or_empty(c.restored_dir) << '\n'
    << "vae_weights=" << path_or_empty(c.vae_weights) << '\n'
    << "denoiser_weights=" << path_or_empty(c.denoiser_weights) << '\n'
    << "pixel_weights=" << path_or_empty(c.pixel_weights) << '\n';
  return o.str();
}

std::uint64_t fingerprint(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_string(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ltaf
