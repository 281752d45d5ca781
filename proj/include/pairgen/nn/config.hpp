#pragma once

#include <string>
#include <string_view>

namespace pairgen::nn {

enum class ModelKind { bidir_causal_hybrid, encoder_decoder, causal_lm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::causal_lm;
  int d_model = 128;
  int n_heads = 4;
  int n_layers = 2;
  int ffn_dim = 512;
  int max_len = 256;
  int vocab_size = 8;
  double dropout = 0.1;
  bool uses_segment_embeddings = false;
  int n_segments = 2;
  int position_classes = 128;  // planner positioning head only
  // encoder_decoder: decoder row i also embeds the template tokens at output
  // positions i .. i+slot_window-1, one table per offset. 0 turns this off.
  int slot_window = 0;
  bool uses_slot_embeddings() const { return slot_window > 0; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace pairgen::nn
