#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tote/core/tensor.hpp"

namespace tote {

// Named parameter tensors; map keeps iteration order deterministic.
class ParamStore {
 public:
  TensorPtr add(const std::string& name, TensorPtr t);
  TensorPtr at(const std::string& name) const;  // throws CheckpointError when absent
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  long long total_parameters() const;
  const std::map<std::string, TensorPtr>& items() const { return params_; }
  std::vector<TensorPtr> tensors() const;

  // Keeps only entries whose name the predicate accepts.
  ParamStore filtered(const std::function<bool(const std::string&)>& keep) const;

 private:
  std::map<std::string, TensorPtr> params_;
};

// Checkpoint archive: magic + JSON metadata + named float64 arrays.
// Loaded tensors are created with requires_grad so a model can train on.
struct Checkpoint {
  nlohmann::json meta;
  ParamStore params;
};

void save_checkpoint(const std::string& path, const nlohmann::json& meta, const ParamStore& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tote
