#include "bcop/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "bcop/binary_io.hpp"

namespace bcop {

namespace {
constexpr std::size_t kMaxSpecBytes = 1 << 20;
constexpr std::uint32_t kMaxLayers = 1024;
}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIo, "error reading " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "error writing " + path);
}

std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model) {
  ByteWriter w;
  w.raw("BCKP");
  w.u32(kCheckpointVersion);
  w.str(to_json(model.spec));
  w.f32(model.logit_scale);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& l : model.layers) {
    w.u32(static_cast<std::uint32_t>(l.spec_index));
    w.u32(static_cast<std::uint32_t>(l.out_channels));
    w.u32(static_cast<std::uint32_t>(l.fan_in));
    for (float v : l.weights) w.f32(v);
    w.u8(l.bn ? 1 : 0);
    if (l.bn) {
      w.f32(l.bn->eps);
      for (const auto* arr : {&l.bn->gamma, &l.bn->beta, &l.bn->mean, &l.bn->var}) {
        for (float v : *arr) w.f32(v);
      }
    }
  }
  return w.take();
}

TrainedModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4, "magic") != "BCKP") fail(ErrorCode::kBadMagic, "not a BCKP checkpoint");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kBadVersion, "checkpoint version " + std::to_string(version) + " (supported: " +
                                     std::to_string(kCheckpointVersion) + ")");
  }
  TrainedModel model;
  model.spec = network_spec_from_json(r.str("spec", kMaxSpecBytes));
  model.logit_scale = r.f32("logit scale");
  const std::uint32_t n = r.u32("layer count");
  if (n > kMaxLayers) fail(ErrorCode::kBounds, "checkpoint claims " + std::to_string(n) + " layers");
  for (std::uint32_t k = 0; k < n; ++k) {
    LatentLayer l;
    l.spec_index = r.u32("spec index");
    l.out_channels = static_cast<int>(r.u32("out channels"));
    l.fan_in = static_cast<int>(r.u32("fan-in"));
    const std::uint64_t count = static_cast<std::uint64_t>(static_cast<std::uint32_t>(l.out_channels)) *
                                static_cast<std::uint32_t>(l.fan_in);
    r.require(count, 4, "weights");
    l.weights.resize(count);
    for (auto& v : l.weights) v = r.f32("weights");
    if (r.u8("bn flag")) {
      BatchNormParams bn;
      bn.eps = r.f32("bn eps");
      const auto ch = static_cast<std::uint32_t>(l.out_channels);
      r.require(std::uint64_t{ch} * 4, 4, "batch norm");
      for (auto* arr : {&bn.gamma, &bn.beta, &bn.mean, &bn.var}) {
        arr->resize(ch);
        for (auto& v : *arr) v = r.f32("batch norm");
      }
      l.bn = std::move(bn);
    }
    model.layers.push_back(std::move(l));
  }
  if (r.remaining() != 0) fail(ErrorCode::kFormat, "trailing bytes after checkpoint");
  validate_model(model);
  return model;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_bytes(path.string(), serialize_checkpoint(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path.string()));
}

}  // namespace bcop
