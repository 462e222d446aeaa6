#include "seqmark/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace seqmark {

void ModelConfig::validate() const {
  std::vector<std::string> bad;
  auto positive = [&](std::size_t v, const char* name) {
    if (v == 0) bad.emplace_back(name);
  };
  positive(vocab_size, "vocab_size");
  positive(d_model, "d_model");
  positive(d_ff, "d_ff");
  positive(d_adj, "d_adj");
  positive(d_inner, "d_inner");
  positive(d_state, "d_state");
  positive(conv_kernel, "conv_kernel");
  positive(d_output, "d_output");
  positive(skip_h1, "skip_h1");
  positive(skip_h2, "skip_h2");
  positive(max_len, "max_len");
  if (!bad.empty()) {
    std::string msg = "inconsistent model config: must be positive:";
    for (const auto& b : bad) msg += " " + b;
    throw ConfigError(msg);
  }
  if (conv_kernel > max_len) {
    throw ConfigError("inconsistent model config: conv_kernel (" + std::to_string(conv_kernel) +
                      ") exceeds max_len (" + std::to_string(max_len) + ")");
  }
}

ModelConfig ModelConfig::gradcheck_preset() {
  ModelConfig c;
  c.vocab_size = 12;
  c.d_model = 8;
  c.encoder_depth = 1;
  c.d_ff = 8;
  c.d_adj = 8;
  c.d_inner = 8;
  c.d_state = 4;
  c.conv_kernel = 3;
  c.d_output = 8;
  c.skip_h1 = 8;
  c.skip_h2 = 4;
  c.max_len = 8;
  return c;
}

ModelConfig ModelConfig::paper_preset() {
  ModelConfig c;
  c.skip_h1 = 512;
  c.skip_h2 = 256;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
  if (epochs == 0) throw ConfigError("train config: epochs must be positive");
}

Ablation parse_ablation(std::string_view name) {
  if (name == "none") return Ablation::None;
  if (name == "ir-bert") return Ablation::IrBert;
  if (name == "ir-mamba2") return Ablation::IrMamba2;
  if (name == "ir-dot-p-att") return Ablation::IrDotPAtt;
  if (name == "ir-skip-con") return Ablation::IrSkipCon;
  if (name == "ir-crf") return Ablation::IrCrf;
  throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

std::string_view ablation_name(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::IrBert: return "ir-bert";
    case Ablation::IrMamba2: return "ir-mamba2";
    case Ablation::IrDotPAtt: return "ir-dot-p-att";
    case Ablation::IrSkipCon: return "ir-skip-con";
    case Ablation::IrCrf: return "ir-crf";
  }
  return "none";
}

void apply_ablation(ModelConfig& c, Ablation a) {
  switch (a) {
    case Ablation::None: break;
    case Ablation::IrBert: c.use_encoder = false; break;
    case Ablation::IrMamba2: c.extractor = Extractor::Lstm; break;
    case Ablation::IrDotPAtt: c.use_attention_fusion = false; break;
    case Ablation::IrSkipCon: c.use_skip_connection = false; break;
    case Ablation::IrCrf: c.use_crf = false; break;
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("not a number: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("not a boolean: '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size_key = [&](const char* key, std::size_t ModelConfig::*field) {
      t[key] = [field](RunConfig& c, const std::string& v) { c.model.*field = parse_number<std::size_t>(v); };
    };
    auto bool_key = [&](const char* key, bool ModelConfig::*field) {
      t[key] = [field](RunConfig& c, const std::string& v) { c.model.*field = parse_bool(v); };
    };
    size_key("vocab_size", &ModelConfig::vocab_size);
    size_key("d_model", &ModelConfig::d_model);
    size_key("encoder_depth", &ModelConfig::encoder_depth);
    size_key("d_ff", &ModelConfig::d_ff);
    size_key("d_adj", &ModelConfig::d_adj);
    size_key("d_inner", &ModelConfig::d_inner);
    size_key("d_state", &ModelConfig::d_state);
    size_key("conv_kernel", &ModelConfig::conv_kernel);
    size_key("d_output", &ModelConfig::d_output);
    size_key("skip_h1", &ModelConfig::skip_h1);
    size_key("skip_h2", &ModelConfig::skip_h2);
    size_key("max_len", &ModelConfig::max_len);
    bool_key("use_encoder", &ModelConfig::use_encoder);
    bool_key("use_attention_fusion", &ModelConfig::use_attention_fusion);
    bool_key("use_skip_connection", &ModelConfig::use_skip_connection);
    bool_key("use_crf", &ModelConfig::use_crf);
    bool_key("constrained_decoding", &ModelConfig::constrained_decoding);
    t["extractor"] = [](RunConfig& c, const std::string& v) {
      if (v == "mamba2") c.model.extractor = Extractor::Mamba2;
      else if (v == "lstm") c.model.extractor = Extractor::Lstm;
      else throw ConfigError("extractor must be mamba2 or lstm, got '" + v + "'");
    };
    t["tokenization"] = [](RunConfig& c, const std::string& v) { c.model.tokenization = parse_tokenization(v); };
    t["seed"] = [](RunConfig& c, const std::string& v) { c.model.seed = parse_number<std::uint64_t>(v); };
    t["lr"] = [](RunConfig& c, const std::string& v) {
      if (v == "paper") c.train.lr = TrainConfig::kPaperLearningRate;
      else c.train.lr = parse_number<double>(v);
    };
    t["epochs"] = [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<std::size_t>(v); };
    t["patience"] = [](RunConfig& c, const std::string& v) { c.train.patience = parse_number<std::size_t>(v); };
    t["train_seed"] = [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); };
    t["split_seed"] = [](RunConfig& c, const std::string& v) { c.train.split_seed = parse_number<std::uint64_t>(v); };
    t["min_count"] = [](RunConfig& c, const std::string& v) { c.train.min_count = parse_number<std::size_t>(v); };
    t["gradcheck_length"] = [](RunConfig& c, const std::string& v) {
      c.gradcheck_length = parse_number<std::size_t>(v);
    };
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      it->second(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + " (" + key + "): " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
  const auto& m = c.model;
  out << "vocab_size=" << m.vocab_size << '\n'
      << "d_model=" << m.d_model << '\n'
      << "encoder_depth=" << m.encoder_depth << '\n'
      << "d_ff=" << m.d_ff << '\n'
      << "d_adj=" << m.d_adj << '\n'
      << "d_inner=" << m.d_inner << '\n'
      << "d_state=" << m.d_state << '\n'
      << "conv_kernel=" << m.conv_kernel << '\n'
      << "d_output=" << m.d_output << '\n'
      << "skip_h1=" << m.skip_h1 << '\n'
      << "skip_h2=" << m.skip_h2 << '\n'
      << "max_len=" << m.max_len << '\n'
      << "extractor=" << (m.extractor == Extractor::Mamba2 ? "mamba2" : "lstm") << '\n'
      << "use_encoder=" << (m.use_encoder ? "true" : "false") << '\n'
      << "use_attention_fusion=" << (m.use_attention_fusion ? "true" : "false") << '\n'
      << "use_skip_connection=" << (m.use_skip_connection ? "true" : "false") << '\n'
      << "use_crf=" << (m.use_crf ? "true" : "false") << '\n'
      << "constrained_decoding=" << (m.constrained_decoding ? "true" : "false") << '\n'
      << "tokenization=" << tokenization_name(m.tokenization) << '\n'
      << "seed=" << m.seed << '\n';
  std::ostringstream lr;
  lr.precision(17);
  lr << c.train.lr;
  out << "lr=" << lr.str() << '\n'
      << "epochs=" << c.train.epochs << '\n'
      << "patience=" << c.train.patience << '\n'
      << "train_seed=" << c.train.seed << '\n'
      << "split_seed=" << c.train.split_seed << '\n'
      << "min_count=" << c.train.min_count << '\n'
      << "gradcheck_length=" << c.gradcheck_length << '\n';
}

nlohmann::json to_json(const ModelConfig& m) {
  return {
      {"vocab_size", m.vocab_size},
      {"d_model", m.d_model},
      {"encoder_depth", m.encoder_depth},
      {"d_ff", m.d_ff},
      {"d_adj", m.d_adj},
      {"d_inner", m.d_inner},
      {"d_state", m.d_state},
      {"conv_kernel", m.conv_kernel},
      {"d_output", m.d_output},
      {"skip_h1", m.skip_h1},
      {"skip_h2", m.skip_h2},
      {"max_len", m.max_len},
      {"extractor", m.extractor == Extractor::Mamba2 ? "mamba2" : "lstm"},
      {"use_encoder", m.use_encoder},
      {"use_attention_fusion", m.use_attention_fusion},
      {"use_skip_connection", m.use_skip_connection},
      {"use_crf", m.use_crf},
      {"constrained_decoding", m.constrained_decoding},
      {"tokenization", tokenization_name(m.tokenization)},
      {"seed", m.seed},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.vocab_size = j.at("vocab_size").get<std::size_t>();
  m.d_model = j.at("d_model").get<std::size_t>();
  m.encoder_depth = j.at("encoder_depth").get<std::size_t>();
  m.d_ff = j.at("d_ff").get<std::size_t>();
  m.d_adj = j.at("d_adj").get<std::size_t>();
  m.d_inner = j.at("d_inner").get<std::size_t>();
  m.d_state = j.at("d_state").get<std::size_t>();
  m.conv_kernel = j.at("conv_kernel").get<std::size_t>();
  m.d_output = j.at("d_output").get<std::size_t>();
  m.skip_h1 = j.at("skip_h1").get<std::size_t>();
  m.skip_h2 = j.at("skip_h2").get<std::size_t>();
  m.max_len = j.at("max_len").get<std::size_t>();
  const auto ex = j.at("extractor").get<std::string>();
  if (ex == "mamba2") m.extractor = Extractor::Mamba2;
  else if (ex == "lstm") m.extractor = Extractor::Lstm;
  else throw ConfigError("unknown extractor '" + ex + "'");
  m.use_encoder = j.at("use_encoder").get<bool>();
  m.use_attention_fusion = j.at("use_attention_fusion").get<bool>();
  m.use_skip_connection = j.at("use_skip_connection").get<bool>();
  m.use_crf = j.at("use_crf").get<bool>();
  m.constrained_decoding = j.at("constrained_decoding").get<bool>();
  m.tokenization = parse_tokenization(j.at("tokenization").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace seqmark
