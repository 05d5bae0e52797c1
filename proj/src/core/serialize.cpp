#include "tote/core/serialize.hpp"

#include <cstring>
#include <fstream>

#include "tote/core/errors.hpp"

namespace tote {

namespace {
constexpr char kMagic[4] = {'T', 'V', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f, const std::string& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw CheckpointError("truncated checkpoint: " + path);
  return v;
}
}  // namespace

TensorPtr ParamStore::add(const std::string& name, TensorPtr t) {
  auto [it, inserted] = params_.emplace(name, std::move(t));
  if (!inserted) throw CheckpointError("duplicate parameter name: " + name);
  return it->second;
}

TensorPtr ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw CheckpointError("missing parameter: " + name);
  return it->second;
}

long long ParamStore::total_parameters() const {
  long long n = 0;
  for (const auto& [name, t] : params_) n += t->numel();
  return n;
}

std::vector<TensorPtr> ParamStore::tensors() const {
  std::vector<TensorPtr> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

ParamStore ParamStore::filtered(const std::function<bool(const std::string&)>& keep) const {
  ParamStore out;
  for (const auto& [name, t] : params_)
    if (keep(name)) out.add(name, t);
  return out;
}

void save_checkpoint(const std::string& path, const nlohmann::json& meta, const ParamStore& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
  f.write(kMagic, 4);
  put(f, kVersion);
  const std::string meta_str = meta.dump();
  put(f, uint64_t(meta_str.size()));
  f.write(meta_str.data(), long(meta_str.size()));
  put(f, uint64_t(params.items().size()));
  for (const auto& [name, t] : params.items()) {
    put(f, uint32_t(name.size()));
    f.write(name.data(), long(name.size()));
    put(f, uint32_t(t->shape.size()));
    for (int d : t->shape) put(f, int32_t(d));
    f.write(reinterpret_cast<const char*>(t->data.data()), long(t->data.size() * sizeof(double)));
  }
  if (!f) throw CheckpointError("write failed for checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const auto version = get<uint32_t>(f, path);
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version in " + path);

  const auto meta_len = get<uint64_t>(f, path);
  std::string meta_str(meta_len, '\0');
  f.read(meta_str.data(), long(meta_len));
  if (!f) throw CheckpointError("truncated checkpoint: " + path);

  Checkpoint ck;
  try {
    ck.meta = nlohmann::json::parse(meta_str);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("bad checkpoint metadata in " + path + ": " + e.what());
  }

  const auto count = get<uint64_t>(f, path);
  for (uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<uint32_t>(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), long(name_len));
    const auto ndim = get<uint32_t>(f, path);
    std::vector<int> shape;
    long long numel = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      shape.push_back(int(get<int32_t>(f, path)));
      numel *= shape.back();
    }
    auto t = make_tensor(shape, true);
    f.read(reinterpret_cast<char*>(t->data.data()), long(numel * long(sizeof(double))));
    if (!f) throw CheckpointError("truncated checkpoint tensor in " + path);
    ck.params.add(name, t);
  }
  return ck;
}

}  // namespace tote
