#include "pairgen/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pairgen/jsonl.hpp"

namespace pairgen {

nn::OptimizerConfig TrainBudget::optimizer(const nn::OptimizerConfig& shared) const {
  nn::OptimizerConfig o = shared;
  if (lr_max) o.lr_max = *lr_max;
  if (warmup) o.warmup = *warmup;
  return o;
}

namespace {

using Setter = std::function<void(Config&, const std::string&)>;

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  std::istringstream in(raw);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw std::invalid_argument("invalid value for " + key + ": '" + raw + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
  if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
  throw std::invalid_argument("invalid value for " + key + ": '" + raw + "'");
}

struct KeyTable {
  std::map<std::string, Setter> setters;
  std::map<std::string, std::function<std::string(const Config&)>> getters;

  template <class T, class Access>
  void num(const std::string& key, Access access) {
    setters[key] = [key, access](Config& c, const std::string& raw) { access(c) = parse_value<T>(key, raw); };
    getters[key] = [access](const Config& c) {
      std::ostringstream os;
      os.precision(17);
      os << access(const_cast<Config&>(c));
      return os.str();
    };
  }
  template <class Access>
  void flag(const std::string& key, Access access) {
    setters[key] = [key, access](Config& c, const std::string& raw) { access(c) = parse_bool(key, raw); };
    getters[key] = [access](const Config& c) { return access(const_cast<Config&>(c)) ? "true" : "false"; };
  }
  template <class Access>
  void text(const std::string& key, Access access) {
    setters[key] = [access](Config& c, const std::string& raw) { access(c) = raw; };
    getters[key] = [access](const Config& c) { return std::string(access(const_cast<Config&>(c))); };
  }
  void budget(const std::string& section, TrainBudget Config::*member) {
    num<int>(section + ".batch_size", [member](Config& c) -> int& { return (c.*member).batch_size; });
    num<long>(section + ".steps", [member](Config& c) -> long& { return (c.*member).steps; });
    setters[section + ".lr_max"] = [section, member](Config& c, const std::string& raw) {
      (c.*member).lr_max = parse_value<double>(section + ".lr_max", raw);
    };
    getters[section + ".lr_max"] = [member](const Config& c) {
      std::ostringstream os;
      os.precision(17);
      os << (c.*member).lr_max.value_or(c.optimizer.lr_max);
      return os.str();
    };
    setters[section + ".warmup"] = [section, member](Config& c, const std::string& raw) {
      (c.*member).warmup = parse_value<long>(section + ".warmup", raw);
    };
    getters[section + ".warmup"] = [member](const Config& c) {
      return std::to_string((c.*member).warmup.value_or(c.optimizer.warmup));
    };
  }
};

const KeyTable& keys() {
  static const KeyTable table = [] {
    KeyTable t;
    t.num<std::uint64_t>("experiment.seed", [](Config& c) -> std::uint64_t& { return c.seed; });
    t.setters["experiment.out_dir"] = [](Config& c, const std::string& raw) { c.out_dir = raw; };
    t.getters["experiment.out_dir"] = [](const Config& c) { return c.out_dir.string(); };

    t.setters["experiment.modes"] = [](Config& c, const std::string& raw) {
      c.modes.clear();
      std::istringstream in(raw);
      std::string item;
      while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(' '));
        item.erase(item.find_last_not_of(' ') + 1);
        try {
          c.modes.push_back(parse_generation_mode(item));
        } catch (const std::exception&) {
          throw std::invalid_argument("invalid value for experiment.modes: '" + item + "'");
        }
      }
    };
    t.getters["experiment.modes"] = [](const Config& c) {
      std::string out;
      for (std::size_t i = 0; i < c.modes.size(); ++i) out += (i ? "," : "") + to_string(c.modes[i]);
      return out;
    };
    t.flag("experiment.predicted_plans", [](Config& c) -> bool& { return c.predicted_plans; });

    t.num<int>("corpus.n_docs", [](Config& c) -> int& { return c.n_docs; });
    t.num<int>("corpus.vocab_size", [](Config& c) -> int& { return c.grammar.vocab_size; });
    t.num<int>("corpus.n_topics", [](Config& c) -> int& { return c.grammar.n_topics; });
    t.num<int>("corpus.topic_words", [](Config& c) -> int& { return c.grammar.topic_words; });
    t.num<int>("corpus.entities_per_topic", [](Config& c) -> int& { return c.grammar.entities_per_topic; });
    t.num<int>("corpus.focus_entities_min", [](Config& c) -> int& { return c.grammar.focus_entities_min; });
    t.num<int>("corpus.focus_entities_max", [](Config& c) -> int& { return c.grammar.focus_entities_max; });
    t.num<int>("corpus.sentences_min", [](Config& c) -> int& { return c.grammar.sentences_min; });
    t.num<int>("corpus.sentences_max", [](Config& c) -> int& { return c.grammar.sentences_max; });
    t.num<int>("corpus.sentence_length_min", [](Config& c) -> int& { return c.grammar.sentence_length_min; });
    t.num<int>("corpus.sentence_length_max", [](Config& c) -> int& { return c.grammar.sentence_length_max; });
    t.num<int>("corpus.target_length_min", [](Config& c) -> int& { return c.grammar.target_length_min; });
    t.num<int>("corpus.target_length_max", [](Config& c) -> int& { return c.grammar.target_length_max; });
    t.num<double>("corpus.kp_coverage", [](Config& c) -> double& { return c.grammar.kp_coverage; });
    t.num<double>("corpus.train_fraction", [](Config& c) -> double& { return c.split[0]; });
    t.num<double>("corpus.valid_fraction", [](Config& c) -> double& { return c.split[1]; });
    t.num<double>("corpus.test_fraction", [](Config& c) -> double& { return c.split[2]; });
    t.num<double>("corpus.signature_threshold", [](Config& c) -> double& { return c.signature_threshold; });
    t.num<int>("corpus.max_keyphrase_length", [](Config& c) -> int& { return c.max_keyphrase_length; });

    t.num<int>("vocab.min_count", [](Config& c) -> int& { return c.min_count; });

    t.num<int>("model.d_model", [](Config& c) -> int& { return c.model.d_model; });
    t.num<int>("model.n_heads", [](Config& c) -> int& { return c.model.n_heads; });
    t.num<int>("model.n_layers", [](Config& c) -> int& { return c.model.n_layers; });
    t.num<int>("model.ffn_dim", [](Config& c) -> int& { return c.model.ffn_dim; });
    t.num<int>("model.max_len", [](Config& c) -> int& { return c.model.max_len; });
    t.num<double>("model.dropout", [](Config& c) -> double& { return c.model.dropout; });
    t.num<double>("model.init_std", [](Config& c) -> double& { return c.init_std; });

    t.num<double>("train.lr_max", [](Config& c) -> double& { return c.optimizer.lr_max; });
    t.num<long>("train.warmup", [](Config& c) -> long& { return c.optimizer.warmup; });
    t.num<double>("train.grad_clip", [](Config& c) -> double& { return c.optimizer.grad_clip; });
    t.num<double>("train.beta1", [](Config& c) -> double& { return c.optimizer.beta1; });
    t.num<double>("train.beta2", [](Config& c) -> double& { return c.optimizer.beta2; });
    t.num<double>("train.eps", [](Config& c) -> double& { return c.optimizer.eps; });

    t.budget("planner", &Config::planner);
    t.num<double>("planner.position_loss_weight", [](Config& c) -> double& { return c.position_loss_weight; });
    t.budget("generator", &Config::generator);
    t.setters["generator.strategy"] = [](Config& c, const std::string& raw) {
      c.generator_train.strategy = parse_corruption_strategy(raw);
    };
    t.getters["generator.strategy"] = [](const Config& c) {
      return std::string(c.generator_train.strategy == CorruptionStrategy::any_token ? "any" : "nonkp");
    };
    t.num<double>("generator.mask_fraction_min", [](Config& c) -> double& { return c.generator_train.fraction_min; });
    t.num<double>("generator.mask_fraction_max", [](Config& c) -> double& { return c.generator_train.fraction_max; });
    t.num<double>("generator.initial_template_rate",
                  [](Config& c) -> double& { return c.generator_train.initial_template_rate; });
    t.num<int>("generator.max_target_len", [](Config& c) -> int& { return c.generator_train.max_target_len; });
    t.num<int>("generator.slot_window", [](Config& c) -> int& { return c.generator_train.slot_window; });
    t.budget("lm", &Config::lm);

    t.num<int>("decode.k", [](Config& c) -> int& { return c.decode.k; });
    t.num<double>("decode.p", [](Config& c) -> double& { return c.decode.p; });
    t.num<double>("decode.temperature", [](Config& c) -> double& { return c.decode.temperature; });
    t.flag("decode.enforce", [](Config& c) -> bool& { return c.decode.enforce; });
    t.num<int>("decode.window", [](Config& c) -> int& { return c.decode.window; });
    t.flag("decode.copy_kept", [](Config& c) -> bool& { return c.decode.copy_kept; });
    t.num<int>("decode.samples", [](Config& c) -> int& { return c.decode.samples; });
    t.num<int>("decode.max_len", [](Config& c) -> int& { return c.decode.max_len; });

    t.num<int>("refine.R", [](Config& c) -> int& { return c.R; });

    t.flag("eval.bleu_smoothing", [](Config& c) -> bool& { return c.bleu_smoothing; });
    t.num<int>("eval.test_limit", [](Config& c) -> int& { return c.test_limit; });
    t.num<int>("eval.decode_seeds", [](Config& c) -> int& { return c.decode_seeds; });
    return t;
  }();
  return table;
}

void validate(const Config& c) {
  c.grammar.validate();
  if (c.n_docs < 1) throw std::invalid_argument("corpus.n_docs must be >= 1");
  if (c.min_count < 1) throw std::invalid_argument("vocab.min_count must be >= 1");
  if (c.max_keyphrase_length < 1 || c.max_keyphrase_length > kMaxKeyphraseLength)
    throw std::invalid_argument("corpus.max_keyphrase_length must be in [1, 10]");
  for (const auto* b : {&c.planner, &c.generator, &c.lm}) {
    if (b->batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (b->steps < 0) throw std::invalid_argument("steps must be >= 0");
  }
  if (c.optimizer.warmup < 1) throw std::invalid_argument("train.warmup must be >= 1");
  if (!(c.optimizer.lr_max > 0)) throw std::invalid_argument("train.lr_max must be positive");
  c.decode.validate(std::numeric_limits<int>::max());
  if (c.R < 1) throw std::invalid_argument("refine.R must be >= 1");
  if (c.generator_train.slot_window < 0) throw std::invalid_argument("generator.slot_window must be >= 0");
  if (c.generator_train.fraction_min < 0 || c.generator_train.fraction_max > 1 ||
      c.generator_train.fraction_min > c.generator_train.fraction_max)
    throw std::invalid_argument("generator.mask_fraction range invalid");
  if (c.generator_train.max_target_len < 1 || c.generator_train.max_target_len > kMaxPosition + 1)
    throw std::invalid_argument("generator.max_target_len must be in [1, 128]");
  if (c.decode_seeds < 1) throw std::invalid_argument("eval.decode_seeds must be >= 1");
  if (c.modes.empty()) throw std::invalid_argument("experiment.modes must name at least one mode");
  if (c.test_limit < 0) throw std::invalid_argument("eval.test_limit must be >= 0");
  if (!(c.model.dropout >= 0 && c.model.dropout < 1)) throw std::invalid_argument("model.dropout must be in [0, 1)");
}

}  // namespace

Config parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  Config c;
  const auto& table = keys();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw std::invalid_argument("config key outside a section: " + section);
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const auto it = table.setters.find(name);
      if (it == table.setters.end()) throw std::invalid_argument("unknown config key: " + name);
      it->second(c, value.data());
    }
  }
  validate(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::invalid_argument("config file not found: " + path.string());
  return parse_config(read_file(path));
}

std::string render_config(const Config& cfg) {
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [name, get] : keys().getters) {
    const auto dot = name.find('.');
    sections[name.substr(0, dot)][name.substr(dot + 1)] = get(cfg);
  }
  std::string out;
  for (const auto& [section, entries] : sections) {
    out += "[" + section + "]\n";
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

}  // namespace pairgen
