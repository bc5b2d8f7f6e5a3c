#include "bcop/model_file.hpp"

#include <string>

#include "bcop/binary_io.hpp"
#include "bcop/simd/kernels.hpp"

namespace bcop {

namespace {

constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::size_t kMaxName = 256;
constexpr std::uint32_t kMaxExtent = 1u << 16;
constexpr std::uint32_t kMaxFanIn = 1u << 24;

std::uint8_t kind_code(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return 0;
    case LayerKind::kMaxPool: return 1;
    case LayerKind::kFullyConnected: return 2;
  }
  return 0;
}

int bounded(ByteReader& r, const char* what, std::uint32_t max) {
  const std::uint32_t v = r.u32(what);
  if (v > max) fail(ErrorCode::kBounds, std::string(what) + " = " + std::to_string(v) + " exceeds " + std::to_string(max));
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const CompiledModel& m) {
  ByteWriter w;
  w.raw("BCOP");
  w.u32(m.version);
  w.str(m.arch_name);
  for (int v : {m.num_classes, m.input_width, m.input_height, m.input_channels, m.input_bits}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.u32(static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    w.str(l.name);
    w.u8(kind_code(l.kind));
    w.u8(static_cast<std::uint8_t>(l.input_kind));
    w.u8(l.weight_rows.empty() ? 0 : 1);
    w.u8(l.thresholds ? 1 : 0);
    for (int v : {l.kernel, l.stride, l.in_width, l.in_height, l.in_channels, l.out_width, l.out_height,
                  l.out_channels, l.padded_out_channels, l.fan_in}) {
      w.u32(static_cast<std::uint32_t>(v));
    }
  }
  for (const auto& l : m.layers) {
    for (const auto& row : l.weight_rows) {
      for (auto word : row.words()) w.u64(word);
    }
    if (l.thresholds) {
      for (auto t : l.thresholds->thresholds) w.i32(t);
      std::vector<std::uint64_t> bitmap(simd::words_for(l.thresholds->flip.size()), 0);
      for (std::size_t c = 0; c < l.thresholds->flip.size(); ++c) {
        if (l.thresholds->flip[c]) bitmap[c / 64] |= std::uint64_t{1} << (c % 64);
      }
      for (auto word : bitmap) w.u64(word);
    }
  }
  return w.take();
}

CompiledModel deserialize_model(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 4) fail(ErrorCode::kTruncated, "model file shorter than its magic");
  if (r.raw(4, "magic") != "BCOP") fail(ErrorCode::kBadMagic, "not a BCOP model file");
  CompiledModel m;
  m.version = r.u32("version");
  if (m.version != kModelFormatVersion) {
    fail(ErrorCode::kBadVersion, "model format version " + std::to_string(m.version) + " (supported: " +
                                     std::to_string(kModelFormatVersion) + ")");
  }
  m.arch_name = r.str("arch name", kMaxName);
  m.num_classes = bounded(r, "num_classes", kMaxExtent);
  m.input_width = bounded(r, "input width", kMaxExtent);
  m.input_height = bounded(r, "input height", kMaxExtent);
  m.input_channels = bounded(r, "input channels", kMaxExtent);
  m.input_bits = bounded(r, "input bits", 32);
  const std::uint32_t n = r.u32("layer count");
  if (n > kMaxLayers) fail(ErrorCode::kBounds, "model file claims " + std::to_string(n) + " layers");

  struct Flags {
    bool weights;
    bool thresholds;
  };
  std::vector<Flags> flags;
  for (std::uint32_t i = 0; i < n; ++i) {
    CompiledLayer l;
    l.name = r.str("layer name", kMaxName);
    const std::uint8_t kind = r.u8("layer kind");
    if (kind > 2) fail(ErrorCode::kFormat, "layer " + l.name + ": unknown kind " + std::to_string(kind));
    l.kind = kind == 0 ? LayerKind::kConv : kind == 1 ? LayerKind::kMaxPool : LayerKind::kFullyConnected;
    const std::uint8_t input_kind = r.u8("input kind");
    if (input_kind > 1) fail(ErrorCode::kFormat, "layer " + l.name + ": unknown input kind");
    l.input_kind = static_cast<InputKind>(input_kind);
    const bool has_weights = r.u8("weight flag") != 0;
    const bool has_thresholds = r.u8("threshold flag") != 0;
    l.kernel = bounded(r, "kernel", kMaxExtent);
    l.stride = bounded(r, "stride", kMaxExtent);
    l.in_width = bounded(r, "in width", kMaxExtent);
    l.in_height = bounded(r, "in height", kMaxExtent);
    l.in_channels = bounded(r, "in channels", kMaxExtent);
    l.out_width = bounded(r, "out width", kMaxExtent);
    l.out_height = bounded(r, "out height", kMaxExtent);
    l.out_channels = bounded(r, "out channels", kMaxExtent);
    l.padded_out_channels = bounded(r, "padded out channels", kMaxExtent);
    l.fan_in = bounded(r, "fan-in", kMaxFanIn);
    if (has_weights != (l.kind != LayerKind::kMaxPool) || (has_thresholds && !has_weights)) {
      fail(ErrorCode::kFormat, "layer " + l.name + ": section flags inconsistent with kind");
    }
    if (has_weights && (l.fan_in < 1 || l.out_channels < 1)) {
      fail(ErrorCode::kFormat, "layer " + l.name + ": weighted layer with empty shape");
    }
    flags.push_back({has_weights, has_thresholds});
    m.layers.push_back(std::move(l));
  }
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    CompiledLayer& l = m.layers[i];
    if (!flags[i].weights) continue;
    const std::size_t words = simd::words_for(static_cast<std::size_t>(l.fan_in));
    const auto rows = static_cast<std::size_t>(l.out_channels);
    r.require(rows * words, 8, "weights of " + l.name);
    l.weight_rows.reserve(rows);
    for (std::size_t c = 0; c < rows; ++c) {
      std::vector<std::uint64_t> row(words);
      for (auto& word : row) word = r.u64("weights");
      l.weight_rows.emplace_back(std::vector<std::size_t>{static_cast<std::size_t>(l.fan_in)}, std::move(row));
    }
    if (flags[i].thresholds) {
      r.require(rows, 4, "thresholds of " + l.name);
      ThresholdParams t;
      t.fan_in = l.fan_in;
      t.thresholds.resize(rows);
      for (auto& v : t.thresholds) v = r.i32("thresholds");
      const std::size_t bitmap_words = simd::words_for(rows);
      r.require(bitmap_words, 8, "flip bitmap of " + l.name);
      std::vector<std::uint64_t> bitmap(bitmap_words);
      for (auto& word : bitmap) word = r.u64("flip bitmap");
      t.flip.resize(rows);
      for (std::size_t c = 0; c < rows; ++c) t.flip[c] = (bitmap[c / 64] >> (c % 64)) & 1u;
      l.thresholds = std::move(t);
    }
  }
  if (r.remaining() != 0) fail(ErrorCode::kFormat, "trailing bytes after model sections");
  return m;
}

void emit_model(const CompiledModel& model, const std::filesystem::path& path) {
  write_file_bytes(path.string(), serialize_model(model));
}

CompiledModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path.string()));
}

}  // namespace bcop
