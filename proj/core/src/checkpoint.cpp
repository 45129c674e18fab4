#include "him/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace him {

using nlohmann::json;

const Array* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, a] : tensors)
    if (n == name) return &a;
  return nullptr;
}

namespace {

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(const char* p) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  json manifest = json::array();
  uint64_t offset = 0;
  for (const auto& [name, a] : data.tensors) {
    manifest.push_back({{"name", name}, {"shape", a.shape}, {"offset", offset}});
    offset += static_cast<uint64_t>(a.numel()) * 4;
  }
  json header = {
      {"config", data.config}, {"vocab", data.vocab},   {"rng", data.rng_state},
      {"opt_step", data.opt_step}, {"epoch", data.epoch}, {"manifest", manifest},
  };
  std::string header_bytes = header.dump();

  std::string blob;
  blob.reserve(16 + header_bytes.size() + offset);
  blob.append(kCheckpointMagic, 8);
  put_u64(blob, header_bytes.size());
  blob += header_bytes;
  for (const auto& [name, a] : data.tensors)
    for (double v : a.data) put_f32(blob, static_cast<float>(v));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.good(), "cannot write checkpoint: " + path);
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  require(os.good(), "short write on checkpoint: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  require(blob.size() >= 16, "checkpoint truncated (no header): " + path);
  require(std::memcmp(blob.data(), kCheckpointMagic, 8) == 0,
          "bad checkpoint magic (want HIMCKPT1): " + path);
  uint64_t hlen = get_u64(blob.data() + 8);
  require(16 + hlen <= blob.size(), "checkpoint truncated (header): " + path);

  json header;
  try {
    header = json::parse(blob.substr(16, hlen));
  } catch (const std::exception& e) {
    throw Error("checkpoint header is not valid JSON: " + std::string(e.what()));
  }

  CheckpointData data;
  data.config = header.at("config");
  data.vocab = header.at("vocab").get<std::vector<std::string>>();
  data.rng_state = header.at("rng").get<std::string>();
  data.opt_step = header.at("opt_step").get<int64_t>();
  data.epoch = header.at("epoch").get<int>();

  const char* payload = blob.data() + 16 + hlen;
  uint64_t payload_size = blob.size() - 16 - hlen;
  for (const auto& entry : header.at("manifest")) {
    std::string name = entry.at("name").get<std::string>();
    Shape shape = entry.at("shape").get<Shape>();
    uint64_t off = entry.at("offset").get<uint64_t>();
    uint64_t bytes = static_cast<uint64_t>(numel_of(shape)) * 4;
    require(off + bytes <= payload_size, "checkpoint truncated (payload for " + name + ")");
    Array a(shape);
    for (int64_t i = 0; i < a.numel(); ++i)
      a.data[i] = static_cast<double>(get_f32(payload + off + 4 * i));
    data.tensors.emplace_back(std::move(name), std::move(a));
  }
  return data;
}

}  // namespace him
