#include "pairgen/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pairgen::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void save_checkpoint(const Model<float>& model, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    const auto& c = model.config;
    out << "format_version=" << kCheckpointVersion << '\n'
        << "kind=" << to_string(c.kind) << '\n'
        << "d_model=" << c.d_model << '\n'
        << "n_heads=" << c.n_heads << '\n'
        << "n_layers=" << c.n_layers << '\n'
        << "ffn_dim=" << c.ffn_dim << '\n'
        << "max_len=" << c.max_len << '\n'
        << "vocab_size=" << c.vocab_size << '\n';
    std::ostringstream dropout;
    dropout.precision(17);
    dropout << c.dropout;
    out << "dropout=" << dropout.str() << '\n'
        << "uses_segment_embeddings=" << (c.uses_segment_embeddings ? 1 : 0) << '\n'
        << "n_segments=" << c.n_segments << '\n'
        << "position_classes=" << c.position_classes << '\n'
        << "slot_window=" << c.slot_window << '\n'
        << '\n';
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      const auto& v = model.params.value(i);
      out << model.params.name(i) << '\n' << v.rows() << ' ' << v.cols() << '\n';
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  std::map<std::string, std::string> header;
  std::string line;
  while (std::getline(in, line) && !line.empty()) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed checkpoint header line: " + line);
    header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto take = [&](const std::string& key) {
    auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error("checkpoint header missing " + key);
    std::string v = it->second;
    header.erase(it);
    return v;
  };
  if (take("format_version") != std::to_string(kCheckpointVersion))
    throw std::runtime_error("unsupported checkpoint version");
  ModelConfig c;
  c.kind = parse_model_kind(take("kind"));
  c.d_model = std::stoi(take("d_model"));
  c.n_heads = std::stoi(take("n_heads"));
  c.n_layers = std::stoi(take("n_layers"));
  c.ffn_dim = std::stoi(take("ffn_dim"));
  c.max_len = std::stoi(take("max_len"));
  c.vocab_size = std::stoi(take("vocab_size"));
  c.dropout = std::stod(take("dropout"));
  c.uses_segment_embeddings = take("uses_segment_embeddings") == "1";
  c.n_segments = std::stoi(take("n_segments"));
  c.position_classes = std::stoi(take("position_classes"));
  c.slot_window = header.count("slot_window") ? std::stoi(take("slot_window")) : 0;
  if (!header.empty()) throw std::runtime_error("unknown checkpoint header key: " + header.begin()->first);
  c.validate();

  Model<float> model{c, ParameterSet<float>(parameter_schema(c))};
  std::map<std::string, bool> seen;
  while (std::getline(in, line)) {
    if (!model.params.contains(line)) throw std::runtime_error("unknown parameter in checkpoint: " + line);
    if (seen[line]) throw std::runtime_error("duplicate parameter in checkpoint: " + line);
    seen[line] = true;
    auto& v = model.params[line];
    std::string shape;
    std::getline(in, shape);
    std::istringstream ss(shape);
    long rows = -1, cols = -1;
    ss >> rows >> cols;
    if (rows != v.rows() || cols != v.cols()) throw std::runtime_error("shape mismatch for parameter " + line);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint at parameter " + line);
  }
  for (std::size_t i = 0; i < model.params.size(); ++i)
    if (!seen[model.params.name(i)]) throw std::runtime_error("checkpoint missing parameter " + model.params.name(i));
  if (!model.params.all_finite()) throw std::runtime_error("checkpoint contains non-finite values");
  return model;
}

}  // namespace pairgen::nn
