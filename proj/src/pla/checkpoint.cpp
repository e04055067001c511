#include "pla/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace pla {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'C', 'K', 'P', 'T', '1', '\n'};

template <class T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::ifstream& f, const std::string& path) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(f.good(), ErrorCode::io, "truncated checkpoint: " + path);
  return v;
}

}  // namespace

void save_checkpoint(
    const std::string& path, std::uint64_t config_hash,
    const std::vector<std::pair<std::string, DiffTensor<float>>>& params) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot write checkpoint: " + path);
  f.write(kMagic, sizeof(kMagic));
  write_raw(f, config_hash);
  write_raw(f, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    write_raw(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_raw(f, static_cast<std::uint32_t>(tensor.shape().size()));
    for (int d : tensor.shape()) write_raw(f, static_cast<std::int32_t>(d));
    f.write(reinterpret_cast<const char*>(tensor.data().data()),
            static_cast<std::streamsize>(tensor.size() * sizeof(float)));
  }
  require(f.good(), ErrorCode::io, "short write: " + path);
}

std::vector<CheckpointRecord> load_checkpoint(const std::string& path,
                                              std::uint64_t expected_hash) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  require(f.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          ErrorCode::io, "not a checkpoint file: " + path);
  auto hash = read_raw<std::uint64_t>(f, path);
  require(hash == expected_hash, ErrorCode::config,
          "checkpoint was written for a different model configuration: " + path);
  auto count = read_raw<std::uint32_t>(f, path);
  std::vector<CheckpointRecord> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointRecord rec;
    auto name_len = read_raw<std::uint32_t>(f, path);
    rec.name.resize(name_len);
    f.read(rec.name.data(), name_len);
    auto ndim = read_raw<std::uint32_t>(f, path);
    for (std::uint32_t d = 0; d < ndim; ++d)
      rec.shape.push_back(read_raw<std::int32_t>(f, path));
    std::size_t n = shape_numel(rec.shape);
    rec.values.resize(n);
    f.read(reinterpret_cast<char*>(rec.values.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    require(f.good(), ErrorCode::io, "truncated checkpoint: " + path);
    out.push_back(std::move(rec));
  }
  return out;
}

void apply_checkpoint(
    const std::vector<CheckpointRecord>& records,
    std::vector<std::pair<std::string, DiffTensor<float>>> params) {
  require(records.size() == params.size(), ErrorCode::config,
          "checkpoint parameter count does not match model");
  for (std::size_t i = 0; i < records.size(); ++i) {
    require(records[i].name == params[i].first, ErrorCode::config,
            "checkpoint parameter name mismatch: " + records[i].name);
    require(records[i].shape == params[i].second.shape(), ErrorCode::config,
            "checkpoint parameter shape mismatch: " + records[i].name);
    params[i].second.data() = records[i].values;
  }
}

}  // namespace pla
