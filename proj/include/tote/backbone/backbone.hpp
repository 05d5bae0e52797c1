#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tote/core/image.hpp"
#include "tote/core/rng.hpp"
#include "tote/core/serialize.hpp"
#include "tote/core/tensor.hpp"

namespace tote {

// Vision-only MultiWay transformer encoder: shared self-attention per block
// plus one feed-forward expert per modality. Only the vision expert has a
// forward path; language-side parameters exist so pruning has something
// measurable to remove.
struct BackboneConfig {
  int image_size = 64;
  int patch_size = 16;
  int embed_dim = 96;
  int depth = 4;
  int num_heads = 4;
  int ffn_hidden = 384;
  std::vector<std::string> expert_set = {"vision"};
  // Language stem rows (token embedding table). Counted and prunable, never
  // run. Only meaningful when "language" is in expert_set.
  int text_vocab_size = 0;
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError on invariant violations
  int grid() const { return image_size / patch_size; }
  int tokens() const { return grid() * grid() + 1; }
  bool has_expert(const std::string& m) const;

  nlohmann::json to_json() const;
  static BackboneConfig from_json(const nlohmann::json& j);
};

// Per-expert parameters of one block.
struct ExpertParams {
  TensorPtr norm1_g, norm1_b;  // pre-attention norm
  TensorPtr norm2_g, norm2_b;  // pre-FFN norm
  TensorPtr fc1_w, fc1_b;      // d_i -> ffn_hidden
  TensorPtr fc2_w, fc2_b;      // ffn_hidden -> d_i
};

struct MultiWayBlockParams {
  TensorPtr q_w, q_b, k_w, k_b, v_w, v_b, o_w, o_b;  // shared attention
  std::map<std::string, ExpertParams> experts;
};

struct FeatureMap {
  TensorPtr data;  // [gh*gw, d] row-major over the spatial grid
  int gh = 0, gw = 0, channels = 0;
  int scale_den = 16;  // spatial scale is 1/scale_den of the input image
};

class Backbone {
 public:
  // Binds to existing tensors in `store` (checkpoint load) or, when
  // `init_rng` is given, creates and initializes missing ones.
  Backbone(const BackboneConfig& cfg, ParamStore& store, Rng* init_rng);

  const BackboneConfig& config() const { return cfg_; }

  // [T+1, d_i]: class token, then patch tokens with positions added.
  TensorPtr patchify(const Image& img) const;

  // Pre-norm residual MultiWay block; throws ConfigError for an unknown
  // modality tag.
  TensorPtr multiway_block(const TensorPtr& tokens, int block, const std::string& modality) const;

  struct Encoded {
    TensorPtr cls;  // [1, d_i]
    FeatureMap map;
  };
  Encoded encode(const Image& img, const std::string& modality = "vision") const;
  std::vector<Encoded> encode(const std::vector<Image>& images,
                              const std::string& modality = "vision") const;

  // Exact scalar-parameter total implied by a config.
  static long long count_parameters(const BackboneConfig& cfg);
  // FFN + norm parameters of a single expert in a single block.
  static long long per_expert_block_parameters(const BackboneConfig& cfg);

 private:
  BackboneConfig cfg_;
  TensorPtr patch_w_, patch_b_, pos_, cls_;
  TensorPtr final_norm_g_, final_norm_b_;
  std::vector<MultiWayBlockParams> blocks_;
};

// Config-level pruning: drops every expert but vision (and the language stem).
BackboneConfig prune_experts(const BackboneConfig& cfg);
// Checkpoint-level pruning as pure key filtering.
ParamStore prune_expert_params(const ParamStore& store);

}  // namespace tote
