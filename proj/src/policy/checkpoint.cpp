#include "sockweave/policy/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sockweave::policy {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'L', 'S', 'M', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof v);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void put_raw(const void* data, std::size_t bytes) { buf_.append(static_cast<const char*>(data), bytes); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get(const char* what) {
    T v;
    take(&v, sizeof v, what);
    return v;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    std::string s(n, '\0');
    take(s.data(), n, what);
    return s;
  }
  void take(void* out, std::size_t bytes, const char* what) {
    if (bytes > data_.size() - pos_) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                            std::to_string(pos_));
    }
    std::memcpy(out, data_.data() + pos_, bytes);
    pos_ += bytes;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

void put_range(Writer& w, const Range& r) {
  w.put(static_cast<std::uint32_t>(r.dims()));
  w.put_raw(r.min.data(), sizeof(double) * r.dims());
  w.put_raw(r.max.data(), sizeof(double) * r.dims());
}

Range get_range(Reader& r, const char* what) {
  const auto n = r.get<std::uint32_t>(what);
  Range out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  r.take(out.min.data(), sizeof(double) * n, what);
  r.take(out.max.data(), sizeof(double) * n, what);
  return out;
}

}  // namespace

std::string hash_string(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void save_checkpoint(const ModelParams<float>& params, const std::filesystem::path& path) {
  auto named = const_cast<ModelParams<float>&>(params).named_parameters();
  Writer w;
  w.put_raw(kMagic, sizeof kMagic);
  w.put(kCheckpointVersion);
  w.put_string(hash_string(params.config.hash()));
  w.put_string(params.config.to_json());
  put_range(w, params.stats.angles);
  put_range(w, params.stats.torques);
  put_range(w, params.stats.tactile);
  w.put(static_cast<std::uint32_t>(named.size()));
  auto sections = nlohmann::ordered_json::array();
  for (const auto& [name, t] : named) {
    w.put_string(name);
    w.put(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.put(static_cast<std::int64_t>(d));
    w.put_raw(t.value().data(), sizeof(float) * t.size());
    sections.push_back({{"name", name}, {"shape", t.shape()}});
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CheckpointError("short write to " + path.string());

  nlohmann::ordered_json side{{"format", "HLSMCKPT"},
                              {"version", kCheckpointVersion},
                              {"config_hash", hash_string(params.config.hash())},
                              {"config", nlohmann::ordered_json::parse(params.config.to_json())},
                              {"sections", sections}};
  std::ofstream js(path.string() + ".json");
  if (!js) throw CheckpointError("cannot write checkpoint sidecar for " + path.string());
  js << side.dump(2) << '\n';
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  char magic[8];
  r.take(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto stored_hash = r.get_string("config hash");
  const auto config_text = r.get_string("config");
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(config_text);
  } catch (const std::exception& e) {
    throw CheckpointError(path.string() + ": bad config block: " + e.what());
  }
  if (hash_string(cfg.hash()) != stored_hash) {
    throw CheckpointError(path.string() + ": config block does not match its stored hash");
  }
  if (options.expected_hash && hash_string(*options.expected_hash) != stored_hash) {
    const std::string msg = path.string() + ": config hash " + stored_hash + " differs from expected " +
                            hash_string(*options.expected_hash);
    if (!options.force) throw CheckpointError(msg + " (use force to load anyway)");
    (options.warnings ? *options.warnings : std::cerr) << "warning: " << msg << '\n';
  }

  auto params = ModelParams<float>::init(cfg, 0);
  params.stats.angles = get_range(r, "angle ranges");
  params.stats.torques = get_range(r, "torque ranges");
  params.stats.tactile = get_range(r, "tactile ranges");

  auto named = params.named_parameters();
  const auto count = r.get<std::uint32_t>("section count");
  if (count != named.size()) {
    throw CheckpointError(path.string() + ": " + std::to_string(count) + " sections, config expects " +
                          std::to_string(named.size()));
  }
  for (auto& [name, t] : named) {
    const auto got = r.get_string("section name");
    if (got != name) throw CheckpointError(path.string() + ": expected section " + name + ", found " + got);
    const auto rank = r.get<std::uint32_t>("section rank");
    diff::Shape shape(rank);
    for (auto& d : shape) d = static_cast<diff::Index>(r.get<std::int64_t>("section shape"));
    if (shape != t.shape()) {
      throw CheckpointError(path.string() + ": section " + name + " has shape " + diff::to_string(shape) +
                            ", expected " + diff::to_string(t.shape()));
    }
    r.take(t.mutable_value().data(), sizeof(float) * t.size(), name.c_str());
  }
  if (!r.done()) throw CheckpointError(path.string() + ": trailing bytes after last section");
  return params;
}

}  // namespace sockweave::policy
