#include "csde/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "csde/io.hpp"

namespace csde {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'S', 'D', 'E'};

template <class T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  bool done() const { return pos_ == bytes_.size(); }

  template <class T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "checkpoint truncated at byte " + std::to_string(pos_));
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

struct Record {
  std::vector<std::uint64_t> dims;
  std::vector<double> payload;  // row-major
};

std::string shape_string(const std::vector<std::uint64_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

}  // namespace

void save_checkpoint(const EncoderParams& params, const std::filesystem::path& path) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& t : params.tensors()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    if (t.dims.size() == 2) {
      const Eigen::Index rows = t.dims[0];
      const Eigen::Index cols = t.dims[1];
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) put<double>(out, t.data[c * rows + r]);
    } else {
      for (Eigen::Index i = 0; i < t.size; ++i) put<double>(out, t.data[i]);
    }
  }
  write_file_atomic(path, out);
}

EncoderParams load_checkpoint(const std::filesystem::path& path, const std::optional<EncoderConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open checkpoint " + path.string());
  Reader reader(std::string(std::istreambuf_iterator<char>(in), {}));

  if (reader.get_string(4) != std::string(kMagic, 4))
    throw CheckpointError(CheckpointError::Kind::kCorrupt, "bad magic in " + path.string());
  const auto version = reader.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError(CheckpointError::Kind::kVersion,
                          "checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));

  std::vector<std::pair<std::string, Record>> records;
  while (!reader.done()) {
    const auto name_len = reader.get<std::uint32_t>();
    std::string name = reader.get_string(name_len);
    const auto rank = reader.get<std::uint32_t>();
    if (rank < 1 || rank > 2)
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "tensor " + name + " has unsupported rank");
    Record rec;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      rec.dims.push_back(reader.get<std::uint64_t>());
      count *= rec.dims.back();
    }
    if (count > (std::uint64_t{1} << 32))
      throw CheckpointError(CheckpointError::Kind::kCorrupt, "tensor " + name + " is implausibly large");
    rec.payload.resize(count);
    for (auto& v : rec.payload) v = reader.get<double>();
    records.emplace_back(std::move(name), std::move(rec));
  }

  std::map<std::string, const Record*> by_name;
  for (const auto& [name, rec] : records) by_name[name] = &rec;
  auto find = [&](const std::string& name) -> const Record& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError(CheckpointError::Kind::kCorrupt, "missing tensor " + name);
    return *it->second;
  };
  auto count_layers = [&](const std::string& prefix) {
    std::size_t n = 0;
    while (by_name.count(prefix + std::to_string(n) + ".weight")) ++n;
    return n;
  };

  // Recover the architecture from the stored shapes.
  EncoderConfig config;
  config.hidden_widths.clear();
  config.proj_widths.clear();
  const std::size_t trunk_layers = count_layers("trunk.");
  const std::size_t head_layers = count_layers("head.");
  if (trunk_layers == 0 || head_layers == 0)
    throw CheckpointError(CheckpointError::Kind::kCorrupt, "checkpoint has no trunk or head layers");
  for (std::size_t i = 0; i < trunk_layers; ++i) {
    const auto& w = find("trunk." + std::to_string(i) + ".weight");
    if (w.dims.size() != 2) throw CheckpointError(CheckpointError::Kind::kCorrupt, "trunk weight is not a matrix");
    if (i == 0) config.input_dim = static_cast<Eigen::Index>(w.dims[1]);
    config.hidden_widths.push_back(static_cast<Eigen::Index>(w.dims[0]));
  }
  for (std::size_t i = 0; i < head_layers; ++i) {
    const auto& w = find("head." + std::to_string(i) + ".weight");
    if (w.dims.size() != 2) throw CheckpointError(CheckpointError::Kind::kCorrupt, "head weight is not a matrix");
    config.proj_widths.push_back(static_cast<Eigen::Index>(w.dims[0]));
  }
  const auto& time_w = find("time.weight");
  if (time_w.dims.size() != 2) throw CheckpointError(CheckpointError::Kind::kCorrupt, "time weight is not a matrix");
  config.time_embed_dim = static_cast<Eigen::Index>(time_w.dims[1]);

  if (expected && !(config == *expected))
    throw CheckpointError(CheckpointError::Kind::kShape, "checkpoint architecture does not match the configuration");

  EncoderParams params;
  try {
    params = EncoderParams::zeros(config);
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt, std::string("invalid stored architecture: ") + e.what());
  }
  auto views = params.tensors();
  if (views.size() != records.size())
    throw CheckpointError(CheckpointError::Kind::kCorrupt, "unexpected tensors in checkpoint");
  for (auto& v : views) {
    const Record& rec = find(v.name);
    std::vector<std::uint64_t> want(v.dims.begin(), v.dims.end());
    if (rec.dims != want)
      throw CheckpointError(CheckpointError::Kind::kShape,
                            "tensor " + v.name + " has shape " + shape_string(rec.dims) + ", expected " +
                                shape_string(want));
    if (v.dims.size() == 2) {
      const Eigen::Index rows = v.dims[0];
      const Eigen::Index cols = v.dims[1];
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) v.data[c * rows + r] = rec.payload[r * cols + c];
    } else {
      std::copy(rec.payload.begin(), rec.payload.end(), v.data);
    }
  }
  return params;
}

}  // namespace csde
