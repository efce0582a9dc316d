#include "wic/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace wic {

namespace {

struct Token {
  std::string text;
  std::size_t begin;
  std::size_t end;  // exclusive
};

std::vector<Token> whitespace_tokens(const std::string& text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    tokens.push_back({text.substr(i, j - i), i, j});
    i = j;
  }
  return tokens;
}

}  // namespace

Tokenizer::Tokenizer(std::map<std::string, int> vocabulary, int max_length)
    : vocabulary_(std::move(vocabulary)), max_length_(max_length) {
  if (max_length_ < 3)
    throw Error("invalid-config", "max_length must leave room for a marked token");
  for (const auto& [token, id] : vocabulary_)
    if (id < special::kFirstOrdinary)
      throw Error("invalid-config", "vocabulary id " + std::to_string(id) +
                                        " collides with a reserved special id");
}

Tokenizer Tokenizer::from_texts(const std::vector<std::string>& texts,
                                int max_length) {
  std::set<std::string> unique;
  for (const auto& text : texts)
    for (const auto& tok : whitespace_tokens(text)) unique.insert(tok.text);

  std::map<std::string, int> vocab;
  int next = special::kFirstOrdinary;
  for (const auto& token : unique) vocab.emplace(token, next++);
  return Tokenizer(std::move(vocab), max_length);
}

int Tokenizer::id_of(const std::string& token) const {
  auto it = vocabulary_.find(token);
  return it == vocabulary_.end() ? special::kUnk : it->second;
}

std::size_t Tokenizer::vocab_size() const {
  return vocabulary_.size() + special::kFirstOrdinary;
}

MarkedUsage mark_and_tokenize(const Usage& usage, const Tokenizer& tokenizer) {
  const auto tokens = whitespace_tokens(usage.text);
  if (tokens.empty())
    throw Error("invalid-span", "usage text has no tokens");

  // Tokens overlapping the character span. A span that does not line up
  // with token boundaries is widened to the covering tokens.
  std::size_t first = tokens.size(), last = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].begin < usage.target_end && tokens[i].end > usage.target_start) {
      first = std::min(first, i);
      last = std::max(last, i);
    }
  }

  bool expanded = false;
  if (first > last) {
    // Span falls entirely into whitespace; attach to the nearest following
    // token (or the last token when the span trails the text).
    expanded = true;
    first = tokens.size() - 1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].begin >= usage.target_end) {
        first = i;
        break;
      }
    }
    last = first;
  } else {
    expanded = tokens[first].begin != usage.target_start ||
               tokens[last].end != usage.target_end;
  }

  // Marked sequence before truncation: tokens with <t> ... </t> inserted.
  std::vector<int> marked;
  marked.reserve(tokens.size() + 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == first) marked.push_back(special::kTargetOpen);
    marked.push_back(tokenizer.id_of(tokens[i].text));
    if (i == last) marked.push_back(special::kTargetClose);
  }

  const std::size_t open_pos = first;
  const std::size_t close_pos = last + 2;
  const std::size_t budget = static_cast<std::size_t>(tokenizer.max_length());

  std::vector<int> window;
  if (marked.size() <= budget) {
    window = std::move(marked);
  } else if (close_pos - open_pos + 1 > budget) {
    // The marked span alone exceeds the budget: keep both markers and the
    // leading part of the target tokens.
    window.push_back(special::kTargetOpen);
    for (std::size_t i = open_pos + 1; window.size() < budget - 1; ++i)
      window.push_back(marked[i]);
    window.push_back(special::kTargetClose);
  } else {
    // Center the window on the marked span, clamped to the sequence.
    const std::size_t center = (open_pos + close_pos) / 2;
    std::size_t start = center > budget / 2 ? center - budget / 2 : 0;
    start = std::min(start, marked.size() - budget);
    if (start > open_pos) start = open_pos;
    if (start + budget < close_pos + 1) start = close_pos + 1 - budget;
    window.assign(marked.begin() + static_cast<std::ptrdiff_t>(start),
                  marked.begin() + static_cast<std::ptrdiff_t>(start + budget));
  }

  MarkedUsage out;
  out.span_expanded = expanded;
  out.token_ids.reserve(window.size() + 2);
  out.token_ids.push_back(special::kCls);
  out.token_ids.insert(out.token_ids.end(), window.begin(), window.end());
  out.token_ids.push_back(special::kSep);
  return out;
}

EncoderModel::EncoderModel(Matrix embedding_table_, std::optional<Matrix> projection_)
    : embedding_table(std::move(embedding_table_)), projection(std::move(projection_)) {
  if (embedding_table.cols() < 2 || embedding_table.cols() % 2 != 0)
    throw Error("invalid-config", "embedding dimension must be even and >= 2");
  if (!embedding_table.all_finite())
    throw Error("non-finite-value", "embedding table contains non-finite entries");
  if (projection) {
    if (projection->rows() != embedding_table.cols() ||
        projection->cols() != embedding_table.cols())
      throw Error("shape-mismatch", "projection must be D x D");
    if (!projection->all_finite())
      throw Error("non-finite-value", "projection contains non-finite entries");
  }
}

EncoderModel EncoderModel::random_init(std::size_t vocab_size, std::size_t dim,
                                       bool with_projection, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);

  // The second half of each row starts small: the complex-angle kernel then
  // opens near its real (cosine-like) regime instead of burying the pair
  // ordering under imaginary-part noise.
  Matrix table(vocab_size, dim);
  for (std::size_t r = 0; r < vocab_size; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      table(r, c) = normal(rng) * (c < dim / 2 ? 1.0 : 0.05);

  std::optional<Matrix> projection;
  if (with_projection) {
    // Identity plus small noise, so the initial model is near plain pooling.
    Matrix p(dim, dim);
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c)
        p(r, c) = (r == c ? 1.0 : 0.0) + 0.01 * normal(rng);
    projection = std::move(p);
  }
  return EncoderModel(std::move(table), std::move(projection));
}

std::vector<double> encode(const MarkedUsage& usage, const EncoderModel& model) {
  if (usage.token_ids.empty())
    throw Error("invalid-span", "cannot encode an empty token sequence");

  const std::size_t d = model.dim();
  std::vector<double> pooled(d, 0.0);
  for (int id : usage.token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.vocab_size())
      throw Error("invalid-config", "token id out of range for the model");
    const auto row = model.embedding_table.row(static_cast<std::size_t>(id));
    for (std::size_t c = 0; c < d; ++c) pooled[c] += row[c];
  }
  const double inv_len = 1.0 / static_cast<double>(usage.token_ids.size());
  for (double& v : pooled) v *= inv_len;

  if (!model.projection) return pooled;

  std::vector<double> projected(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += (*model.projection)(r, c) * pooled[c];
    projected[r] = s;
  }
  return projected;
}

EncoderGrad::EncoderGrad(const EncoderModel& model)
    : embedding_table(model.vocab_size(), model.dim()) {
  if (model.projection) projection = Matrix(model.dim(), model.dim());
}

void EncoderGrad::reset() {
  embedding_table.fill(0.0);
  if (projection) projection->fill(0.0);
}

bool EncoderGrad::all_finite() const {
  return embedding_table.all_finite() && (!projection || projection->all_finite());
}

void encode_backward(std::span<const double> grad_out, const MarkedUsage& usage,
                     const EncoderModel& model, EncoderGrad& accum) {
  const std::size_t d = model.dim();
  if (grad_out.size() != d)
    throw Error("shape-mismatch", "output gradient length does not match model dim");
  if (!accum.embedding_table.same_shape(model.embedding_table))
    throw Error("shape-mismatch", "gradient accumulator does not match the model");

  std::vector<double> grad_pooled(d, 0.0);
  if (model.projection) {
    // Recompute the pooled vector for the projection gradient.
    std::vector<double> pooled(d, 0.0);
    for (int id : usage.token_ids) {
      const auto row = model.embedding_table.row(static_cast<std::size_t>(id));
      for (std::size_t c = 0; c < d; ++c) pooled[c] += row[c];
    }
    const double inv_len = 1.0 / static_cast<double>(usage.token_ids.size());
    for (double& v : pooled) v *= inv_len;

    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        (*accum.projection)(r, c) += grad_out[r] * pooled[c];
        grad_pooled[c] += (*model.projection)(r, c) * grad_out[r];
      }
  } else {
    grad_pooled.assign(grad_out.begin(), grad_out.end());
  }

  const double inv_len = 1.0 / static_cast<double>(usage.token_ids.size());
  for (int id : usage.token_ids) {
    auto row = accum.embedding_table.row(static_cast<std::size_t>(id));
    for (std::size_t c = 0; c < d; ++c) row[c] += grad_pooled[c] * inv_len;
  }
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols)
      throw Error("invalid-checkpoint", "ragged parameter matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Tokenizer& tokenizer,
                     const EncoderModel& model) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["max_length"] = tokenizer.max_length();
  j["vocabulary"] = tokenizer.vocabulary();
  j["dim"] = model.dim();
  j["pooling"] = "mean";
  j["embedding_table"] = matrix_to_json(model.embedding_table);
  j["projection"] =
      model.projection ? matrix_to_json(*model.projection) : nlohmann::json(nullptr);

  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write checkpoint to " + path.string());
  out << j.dump();
  out << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot read checkpoint from " + path.string());

  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-checkpoint", e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
    throw Error("invalid-checkpoint", "unsupported checkpoint format version");
  if (j.value("pooling", "mean") != std::string("mean"))
    throw Error("invalid-checkpoint", "unsupported pooling kind");

  Tokenizer tokenizer(j.at("vocabulary").get<std::map<std::string, int>>(),
                      j.at("max_length").get<int>());
  Matrix table = matrix_from_json(j.at("embedding_table"));
  if (table.rows() != tokenizer.vocab_size())
    throw Error("invalid-checkpoint", "embedding rows do not match the vocabulary");
  std::optional<Matrix> projection;
  if (!j.at("projection").is_null()) projection = matrix_from_json(j.at("projection"));
  return {std::move(tokenizer), EncoderModel(std::move(table), std::move(projection))};
}

}  // namespace wic
