#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "wic/encoder.hpp"

using namespace wic;

namespace {

Tokenizer tiny_tokenizer(int max_length = 128) {
  return Tokenizer::from_texts({"a bed of roses"}, max_length);
}

std::string repeated_text(int n) {
  std::ostringstream out;
  for (int i = 0; i < n; ++i) out << (i ? " " : "") << "tok" << i;
  return out.str();
}

int count_id(const MarkedUsage& usage, int id) {
  return static_cast<int>(
      std::count(usage.token_ids.begin(), usage.token_ids.end(), id));
}

void check_invariants(const MarkedUsage& usage, int max_length) {
  REQUIRE(count_id(usage, special::kTargetOpen) == 1);
  REQUIRE(count_id(usage, special::kTargetClose) == 1);
  const auto open = std::find(usage.token_ids.begin(), usage.token_ids.end(),
                              special::kTargetOpen);
  const auto close = std::find(usage.token_ids.begin(), usage.token_ids.end(),
                               special::kTargetClose);
  CHECK(open < close);
  CHECK(usage.token_ids.size() <= static_cast<std::size_t>(max_length) + 2);
  CHECK(usage.token_ids.front() == special::kCls);
  CHECK(usage.token_ids.back() == special::kSep);
}

}  // namespace

TEST_CASE("marking inserts target markers in order") {
  const Tokenizer tok = tiny_tokenizer();
  const Usage usage("a bed of roses", 2, 5);  // "bed"
  const auto marked = mark_and_tokenize(usage, tok);

  const std::vector<int> expected = {
      special::kCls,       tok.id_of("a"),   special::kTargetOpen,
      tok.id_of("bed"),    special::kTargetClose, tok.id_of("of"),
      tok.id_of("roses"),  special::kSep};
  CHECK(marked.token_ids == expected);
  CHECK_FALSE(marked.span_expanded);
}

TEST_CASE("target at the start follows CLS immediately") {
  const Tokenizer tok = tiny_tokenizer();
  const auto marked = mark_and_tokenize(Usage("a bed of roses", 0, 1), tok);
  CHECK(marked.token_ids[0] == special::kCls);
  CHECK(marked.token_ids[1] == special::kTargetOpen);
  CHECK(marked.token_ids[2] == tok.id_of("a"));
}

TEST_CASE("long text is truncated to a window around the target") {
  const std::string text = repeated_text(300);
  const Tokenizer tok = Tokenizer::from_texts({text}, 128);

  // Character span of token number 250.
  std::size_t start = 0;
  for (int i = 0; i < 250; ++i) start = text.find(' ', start) + 1;
  const std::size_t end = text.find(' ', start);

  const auto marked = mark_and_tokenize(Usage(text, start, end), tok);
  // Window oracle: 302 marked ids clamp to the final 128, plus CLS/SEP.
  CHECK(marked.token_ids.size() == 130);
  check_invariants(marked, 128);
  CHECK(marked.token_ids[1 + 250 - 174] == special::kTargetOpen);
}

TEST_CASE("marking holds invariants on adversarial spans") {
  const std::string text = repeated_text(40);
  const Tokenizer tok = Tokenizer::from_texts({text}, 16);

  // Full-sentence target, multi-token target, sub-token spans, whitespace
  // spans, single characters: every output satisfies the invariants.
  const std::size_t spans[][2] = {
      {0, text.size()},  // whole text
      {0, 10},           // multi-token prefix
      {5, 6},            // inside a token
      {4, 5},            // a single space
      {text.size() - 1, text.size()},
  };
  for (const auto& span : spans) {
    const auto marked = mark_and_tokenize(Usage(text, span[0], span[1]), tok);
    check_invariants(marked, 16);
  }

  // Span cutting across token boundaries is expanded with a warning flag.
  const auto expanded = mark_and_tokenize(Usage("a bed of roses", 3, 8), tiny_tokenizer());
  CHECK(expanded.span_expanded);
}

TEST_CASE("unknown tokens map to UNK, never an error") {
  const Tokenizer tok = tiny_tokenizer();
  const auto marked = mark_and_tokenize(Usage("a zebra of roses", 2, 7), tok);
  CHECK(count_id(marked, special::kUnk) == 1);
}

TEST_CASE("encode of a single token is its embedding row") {
  // One ordinary token plus CLS/SEP: craft a usage of exactly one token and
  // compare with the mean of the three involved rows.
  const Tokenizer tok = Tokenizer::from_texts({"solo"}, 8);
  const auto model = EncoderModel::random_init(tok.vocab_size(), 4, false, 1);
  const auto marked = mark_and_tokenize(Usage("solo", 0, 4), tok);
  const auto out = encode(marked, model);
  REQUIRE(out.size() == 4);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0;
    for (int id : marked.token_ids)
      mean += model.embedding_table(static_cast<std::size_t>(id), c);
    mean /= static_cast<double>(marked.token_ids.size());
    CHECK(out[c] == doctest::Approx(mean).epsilon(1e-15));
  }
}

TEST_CASE("mean pooling ignores token order") {
  const Tokenizer tok = tiny_tokenizer();
  const auto model = EncoderModel::random_init(tok.vocab_size(), 6, false, 2);
  MarkedUsage a = mark_and_tokenize(Usage("a bed of roses", 2, 5), tok);
  MarkedUsage b = a;
  std::swap(b.token_ids[1], b.token_ids[5]);
  const auto ea = encode(a, model);
  const auto eb = encode(b, model);
  for (std::size_t c = 0; c < ea.size(); ++c)
    CHECK(ea[c] == doctest::Approx(eb[c]).epsilon(1e-12));
}

TEST_CASE("encode is scale equivariant in the parameters") {
  const Tokenizer tok = tiny_tokenizer();
  auto model = EncoderModel::random_init(tok.vocab_size(), 6, false, 3);
  const auto marked = mark_and_tokenize(Usage("a bed of roses", 6, 8), tok);
  const auto base = encode(marked, model);
  for (double& v : model.embedding_table.data()) v *= 3.0;
  const auto scaled = encode(marked, model);
  for (std::size_t c = 0; c < base.size(); ++c)
    CHECK(scaled[c] == doctest::Approx(3.0 * base[c]).epsilon(1e-12));
}

TEST_CASE("encode_backward places gradients where they belong") {
  const Tokenizer tok = Tokenizer::from_texts({"solo"}, 8);
  const auto model = EncoderModel::random_init(tok.vocab_size(), 4, false, 4);
  const auto marked = mark_and_tokenize(Usage("solo", 0, 4), tok);

  EncoderGrad grad(model);
  std::vector<double> zero(4, 0.0);
  encode_backward(zero, marked, model, grad);
  CHECK(std::all_of(grad.embedding_table.data().begin(),
                    grad.embedding_table.data().end(),
                    [](double v) { return v == 0.0; }));

  // A unit gradient lands 1/len on each participating row.
  std::vector<double> unit = {1.0, 0.0, 0.0, 0.0};
  encode_backward(unit, marked, model, grad);
  const double share = 1.0 / static_cast<double>(marked.token_ids.size());
  for (int id : marked.token_ids)
    CHECK(grad.embedding_table(static_cast<std::size_t>(id), 0) ==
          doctest::Approx(share).epsilon(1e-15));
}

TEST_CASE("encode_backward matches finite differences") {
  const Tokenizer tok = tiny_tokenizer();
  for (bool with_projection : {false, true}) {
    auto model = EncoderModel::random_init(tok.vocab_size(), 4, with_projection, 5);
    const auto marked = mark_and_tokenize(Usage("a bed of roses", 2, 5), tok);

    // Scalar objective: dot of the encoding with a fixed direction.
    const std::vector<double> direction = {0.3, -1.0, 0.7, 0.2};
    auto objective = [&](const EncoderModel& m) {
      const auto e = encode(marked, m);
      double s = 0.0;
      for (std::size_t c = 0; c < e.size(); ++c) s += direction[c] * e[c];
      return s;
    };

    EncoderGrad grad(model);
    encode_backward(direction, marked, model, grad);

    const double h = 1e-6;
    double worst = 0.0;
    EncoderModel probe = model;
    auto central = [&](double& cell) {
      const double original = cell;
      cell = original + h;
      const double plus = objective(probe);
      cell = original - h;
      const double minus = objective(probe);
      cell = original;
      return (plus - minus) / (2.0 * h);
    };
    for (std::size_t r = 0; r < model.vocab_size(); ++r) {
      for (std::size_t c = 0; c < model.dim(); ++c) {
        const double numeric = central(probe.embedding_table(r, c));
        const double analytic = grad.embedding_table(r, c);
        worst = std::max(worst, std::fabs(numeric - analytic) /
                                    std::max({std::fabs(numeric),
                                              std::fabs(analytic), 1.0}));
      }
    }
    if (with_projection) {
      for (std::size_t r = 0; r < model.dim(); ++r)
        for (std::size_t c = 0; c < model.dim(); ++c) {
          const double numeric = central((*probe.projection)(r, c));
          const double analytic = (*grad.projection)(r, c);
          worst = std::max(worst, std::fabs(numeric - analytic) /
                                      std::max({std::fabs(numeric),
                                                std::fabs(analytic), 1.0}));
        }
    }
    INFO("projection=", with_projection, " worst=", worst);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  const Tokenizer tok = tiny_tokenizer(64);
  const auto model = EncoderModel::random_init(tok.vocab_size(), 6, true, 6);

  const auto path = std::filesystem::temp_directory_path() / "wic_ckpt_test.json";
  save_checkpoint(path, tok, model);
  const auto loaded = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(loaded.tokenizer.vocabulary() == tok.vocabulary());
  CHECK(loaded.tokenizer.max_length() == 64);
  CHECK(loaded.model.embedding_table == model.embedding_table);
  REQUIRE(loaded.model.projection.has_value());
  CHECK(*loaded.model.projection == *model.projection);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(EncoderModel(Matrix(4, 3), std::nullopt), Error);  // odd D
  CHECK_THROWS_AS(EncoderModel(Matrix(4, 4), Matrix(2, 4)), Error);  // bad proj
}
