#include "pairgen/nn/parameters.hpp"

#include <stdexcept>

#include "pairgen/rng.hpp"

namespace pairgen::nn {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::bidir_causal_hybrid: return "bidir_causal_hybrid";
    case ModelKind::encoder_decoder: return "encoder_decoder";
    case ModelKind::causal_lm: return "causal_lm";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "bidir_causal_hybrid") return ModelKind::bidir_causal_hybrid;
  if (name == "encoder_decoder") return ModelKind::encoder_decoder;
  if (name == "causal_lm") return ModelKind::causal_lm;
  throw std::invalid_argument("unknown model kind: " + std::string(name));
}

void ModelConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("invalid model config: ") + what); };
  if (d_model < 1) fail("d_model");
  if (n_heads < 1 || d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (n_layers < 1) fail("n_layers");
  if (ffn_dim < 1) fail("ffn_dim");
  if (max_len < 1) fail("max_len");
  if (vocab_size < 8) fail("vocab_size");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout");
  if (uses_segment_embeddings && n_segments < 1) fail("n_segments");
  if (kind == ModelKind::bidir_causal_hybrid && position_classes < 1) fail("position_classes");
  if (slot_window < 0) fail("slot_window");
  if (slot_window > 0 && kind != ModelKind::encoder_decoder) fail("slot embeddings need encoder_decoder");
}

namespace {

void add_block(std::vector<ParameterShape>& s, const std::string& p, int d, int f, bool cross) {
  auto ln = [&](const std::string& n) {
    s.push_back({n + ".gain", 1, d});
    s.push_back({n + ".bias", 1, d});
  };
  auto attn = [&](const std::string& n) {
    for (const char* w : {"q", "k", "v", "o"}) {
      s.push_back({n + ".w" + w, d, d});
      s.push_back({n + ".b" + w, 1, d});
    }
  };
  ln(p + ".ln_self");
  attn(p + ".self");
  if (cross) {
    ln(p + ".ln_cross");
    attn(p + ".cross");
  }
  ln(p + ".ln_ffn");
  s.push_back({p + ".ffn.w1", d, f});
  s.push_back({p + ".ffn.b1", 1, f});
  s.push_back({p + ".ffn.w2", f, d});
  s.push_back({p + ".ffn.b2", 1, d});
}

void add_stack(std::vector<ParameterShape>& s, const std::string& prefix, const ModelConfig& c, bool cross) {
  for (int l = 0; l < c.n_layers; ++l) add_block(s, prefix + "." + std::to_string(l), c.d_model, c.ffn_dim, cross);
  s.push_back({prefix + ".final_ln.gain", 1, c.d_model});
  s.push_back({prefix + ".final_ln.bias", 1, c.d_model});
}

}  // namespace

std::vector<ParameterShape> parameter_schema(const ModelConfig& c) {
  c.validate();
  std::vector<ParameterShape> s;
  s.push_back({"embed.token", c.vocab_size, c.d_model});
  s.push_back({"embed.position", c.max_len, c.d_model});
  if (c.uses_segment_embeddings) s.push_back({"embed.segment", c.n_segments, c.d_model});
  for (int k = 0; k < c.slot_window; ++k) s.push_back({"embed.slot." + std::to_string(k), c.vocab_size, c.d_model});
  switch (c.kind) {
    case ModelKind::encoder_decoder:
      add_stack(s, "enc", c, false);
      add_stack(s, "dec", c, true);
      break;
    case ModelKind::bidir_causal_hybrid:
    case ModelKind::causal_lm:
      add_stack(s, "layer", c, false);
      break;
  }
  s.push_back({"head.token.w", c.d_model, c.vocab_size});
  s.push_back({"head.token.b", 1, c.vocab_size});
  if (c.kind == ModelKind::bidir_causal_hybrid) {
    s.push_back({"head.position.w", c.d_model, c.position_classes});
    s.push_back({"head.position.b", 1, c.position_classes});
  }
  return s;
}

template <class S>
ParameterSet<S>::ParameterSet(const std::vector<ParameterShape>& schema) {
  for (const auto& p : schema) {
    if (!index_.emplace(p.name, names_.size()).second) throw std::logic_error("duplicate parameter " + p.name);
    names_.push_back(p.name);
    values_.push_back(Matrix<S>::Zero(p.rows, p.cols));
  }
}

template <class S>
Matrix<S>& ParameterSet<S>::operator[](std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return values_[it->second];
}

template <class S>
const Matrix<S>& ParameterSet<S>::operator[](std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return values_[it->second];
}

template <class S>
void ParameterSet<S>::set_zero() {
  for (auto& v : values_) v.setZero();
}

template <class S>
std::size_t ParameterSet<S>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

template <class S>
bool ParameterSet<S>::all_finite() const {
  for (const auto& v : values_)
    if (!v.allFinite()) return false;
  return true;
}

template <class S>
Model<S> Model<S>::initialized(const ModelConfig& config, std::uint64_t seed, double init_std) {
  Model<S> m{config, ParameterSet<S>(parameter_schema(config))};
  Rng rng(derive_seed(seed, "init"));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const auto& name = m.params.name(i);
    auto& v = m.params.value(i);
    const auto ends_with = [&](std::string_view suffix) {
      return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".gain")) {
      v.setOnes();
    } else if (v.rows() == 1 && name.rfind("embed.", 0) != 0) {
      v.setZero();  // biases
    } else {
      for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = static_cast<S>(init_std * normal01(rng));
    }
  }
  return m;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template struct Model<float>;
template struct Model<double>;

}  // namespace pairgen::nn
