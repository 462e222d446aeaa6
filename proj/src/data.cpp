#include "seqmark/data.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "seqmark/tensor.hpp"

namespace seqmark {

ParseError::ParseError(std::size_t line_no, const std::string& what)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}

std::vector<LabeledExample> parse_dataset(std::istream& in) {
  std::vector<LabeledExample> out;
  LabeledExample current;
  auto flush = [&] {
    if (!current.labels.empty()) out.push_back(std::move(current));
    current = LabeledExample{};
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(line_no, "expected exactly one tab between token and label");
    }
    std::string token = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    if (token.empty()) throw ParseError(line_no, "empty token");
    auto id = parse_label(label);
    if (!id) throw ParseError(line_no, "unknown label '" + label + "'");
    current.raw_tokens.push_back(std::move(token));
    current.labels.push_back(*id);
    current.tokens.push_back(Vocabulary::kUnknownId);
  }
  flush();
  return out;
}

std::vector<LabeledExample> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  return parse_dataset(in);
}

void serialize_dataset(std::ostream& out, std::span<const LabeledExample> examples) {
  for (std::size_t e = 0; e < examples.size(); ++e) {
    if (e) out << '\n';
    const auto& ex = examples[e];
    for (std::size_t i = 0; i < ex.size(); ++i) out << ex.raw_tokens[i] << '\t' << label_name(ex.labels[i]) << '\n';
  }
}

void save_dataset(const std::string& path, std::span<const LabeledExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  serialize_dataset(out, examples);
}

std::vector<std::size_t> validate_bio(std::span<const std::size_t> labels) {
  const auto inside = label_index(Label::IRumor), outside = label_index(Label::O);
  std::vector<std::size_t> violations;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == inside && (i == 0 || labels[i - 1] == outside)) violations.push_back(i);
  }
  return violations;
}

DatasetSplit split_dataset(std::vector<LabeledExample> examples, std::uint64_t seed) {
  const std::size_t n = examples.size();
  if (n < 10) {
    throw ConfigError("split_dataset needs at least 10 examples, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_val = n / 10;
  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? split.train : i < n_train + n_val ? split.validation : split.test;
    dst.push_back(std::move(examples[order[i]]));
  }
  return split;
}

Tokenization parse_tokenization(std::string_view name) {
  if (name == "char") return Tokenization::Character;
  if (name == "whitespace") return Tokenization::Whitespace;
  throw ConfigError("unknown tokenization '" + std::string(name) + "' (expected char or whitespace)");
}

std::string_view tokenization_name(Tokenization t) {
  return t == Tokenization::Character ? "char" : "whitespace";
}

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: keep it as its own token
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, Tokenization mode) {
  std::vector<std::string> out;
  std::size_t i = 0;
  if (mode == Tokenization::Character) {
    while (i < text.size()) {
      const auto c = static_cast<unsigned char>(text[i]);
      const std::size_t len = std::min(utf8_length(c), text.size() - i);
      if (!(len == 1 && is_space(c))) out.emplace_back(text.substr(i, len));
      i += len;
    }
  } else {
    while (i < text.size()) {
      while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{std::string(kUnknownToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) tokens_.emplace_back(kUnknownToken);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ConfigError("duplicate vocabulary entry '" + tokens_[i] + "' at line " + std::to_string(i));
    }
  }
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) {
    throw LookupError("vocabulary id " + std::to_string(id) + " outside " + std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  if (tokens.empty()) throw ConfigError("empty vocabulary file");
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const LabeledExample> examples, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : examples)
    for (const auto& t : ex.raw_tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [token, count] : counts) {
    if (count >= min_count && token != Vocabulary::kUnknownToken) entries.emplace_back(token, count);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(Vocabulary::kUnknownToken)};
  for (auto& e : entries) tokens.push_back(std::move(e.first));
  return Vocabulary(std::move(tokens));
}

void index_examples(std::span<LabeledExample> examples, const Vocabulary& vocab) {
  for (auto& ex : examples) ex.tokens = vocab.encode(ex.raw_tokens);
}

}  // namespace seqmark
