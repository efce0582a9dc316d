#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wic/datamodel.hpp"
#include "wic/matrix.hpp"

namespace wic {

// Reserved special ids; ordinary vocabulary starts above them.
namespace special {
inline constexpr int kCls = 0;
inline constexpr int kSep = 1;
inline constexpr int kUnk = 2;
inline constexpr int kTargetOpen = 3;   // <t>
inline constexpr int kTargetClose = 4;  // </t>
inline constexpr int kFirstOrdinary = 5;
}  // namespace special

class Tokenizer {
 public:
  explicit Tokenizer(std::map<std::string, int> vocabulary, int max_length = 128);

  // Builds the vocabulary from whitespace tokens of the given texts, ids
  // assigned in sorted token order.
  static Tokenizer from_texts(const std::vector<std::string>& texts,
                              int max_length = 128);

  int id_of(const std::string& token) const;  // UNK for unknown tokens
  int max_length() const { return max_length_; }
  std::size_t vocab_size() const;  // specials included
  const std::map<std::string, int>& vocabulary() const { return vocabulary_; }

 private:
  std::map<std::string, int> vocabulary_;
  int max_length_;
};

// Token ids of one usage: CLS ... <t> target tokens </t> ... SEP, truncated
// to max_length (markers included) before CLS/SEP are added.
struct MarkedUsage {
  std::vector<int> token_ids;
  // Set when the character span did not align with token boundaries and was
  // widened to the covering tokens.
  bool span_expanded = false;
};

MarkedUsage mark_and_tokenize(const Usage& usage, const Tokenizer& tokenizer);

enum class Pooling { mean };

// The trainable toy bi-encoder: one embedding row per vocabulary id, mean
// pooling over all tokens, optional square projection on top.
struct EncoderModel {
  EncoderModel() = default;
  EncoderModel(Matrix embedding_table_, std::optional<Matrix> projection_);

  static EncoderModel random_init(std::size_t vocab_size, std::size_t dim,
                                  bool with_projection, std::uint64_t seed);

  std::size_t dim() const { return embedding_table.cols(); }
  std::size_t vocab_size() const { return embedding_table.rows(); }

  Matrix embedding_table;            // V x D, D even
  std::optional<Matrix> projection;  // D x D
  Pooling pooling = Pooling::mean;
};

std::vector<double> encode(const MarkedUsage& usage, const EncoderModel& model);

// Additive parameter-gradient accumulator for one model.
struct EncoderGrad {
  explicit EncoderGrad(const EncoderModel& model);

  void reset();
  bool all_finite() const;

  Matrix embedding_table;
  std::optional<Matrix> projection;
};

void encode_backward(std::span<const double> grad_out, const MarkedUsage& usage,
                     const EncoderModel& model, EncoderGrad& accum);

// Checkpoint format: JSON with format_version, vocabulary, dimensions and
// parameter matrices. Doubles survive the round trip exactly.
struct Checkpoint {
  Tokenizer tokenizer;
  EncoderModel model;
};

void save_checkpoint(const std::filesystem::path& path, const Tokenizer& tokenizer,
                     const EncoderModel& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wic
