#pragma once

#include <string>
#include <variant>
#include <vector>

#include "wic/error.hpp"

namespace wic {

// DURel relatedness level: 4 identical, 3 closely related, 2 distantly
// related, 1 unrelated.
class OrdinalLabel {
 public:
  explicit OrdinalLabel(int value) : value_(value) {
    if (value < 1 || value > 4)
      throw Error("invalid-label", "ordinal label must be in {1,2,3,4}, got " +
                                       std::to_string(value));
  }
  int value() const { return value_; }
  friend bool operator==(OrdinalLabel, OrdinalLabel) = default;

 private:
  int value_;
};

// 1 = same sense, 0 = different sense.
class BinaryLabel {
 public:
  explicit BinaryLabel(int value) : value_(value) {
    if (value != 0 && value != 1)
      throw Error("invalid-label",
                  "binary label must be 0 or 1, got " + std::to_string(value));
  }
  int value() const { return value_; }
  friend bool operator==(BinaryLabel, BinaryLabel) = default;

 private:
  int value_;
};

// Continuous similarity target in [0, 1] consumed by the regression and
// ranking losses.
class CosineTarget {
 public:
  explicit CosineTarget(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0))
      throw Error("invalid-label", "cosine target must lie in [0,1], got " +
                                       std::to_string(value));
  }
  double value() const { return value_; }
  friend bool operator==(CosineTarget, CosineTarget) = default;

 private:
  double value_;
};

using GoldLabel = std::variant<OrdinalLabel, BinaryLabel, CosineTarget>;

enum class LabelSpace { ordinal, binary, cosine };

LabelSpace label_space_of(const GoldLabel& gold);
std::string to_string(LabelSpace space);
LabelSpace label_space_from_string(const std::string& name);

// Label mappings between the three spaces.
CosineTarget ordinal_to_cosine(OrdinalLabel label);  // (v - 1) / 3
CosineTarget binary_to_cosine(BinaryLabel label);    // 1 -> 1.0, 0 -> 1/3
BinaryLabel ordinal_to_binary(OrdinalLabel label);   // {1,2} -> 0, {3,4} -> 1
OrdinalLabel binary_to_ordinal(BinaryLabel label);   // 0 -> 2, 1 -> 4

// One usage of the target word: raw text plus the character span of the
// target word, end exclusive.
struct Usage {
  Usage(std::string text_, std::size_t target_start_, std::size_t target_end_)
      : text(std::move(text_)),
        target_start(target_start_),
        target_end(target_end_) {
    if (!(target_start < target_end && target_end <= text.size()))
      throw Error("invalid-span",
                  "target span [" + std::to_string(target_start) + "," +
                      std::to_string(target_end) + ") invalid for text of length " +
                      std::to_string(text.size()));
  }

  std::string text;
  std::size_t target_start;
  std::size_t target_end;
};

// A judged usage pair. `lemma` is provenance carried through from input
// files; it may be empty.
struct JudgedInstance {
  JudgedInstance(std::string instance_id_, std::string language_,
                 std::string lemma_, Usage usage1_, Usage usage2_,
                 GoldLabel gold_)
      : instance_id(std::move(instance_id_)),
        language(std::move(language_)),
        lemma(std::move(lemma_)),
        usage1(std::move(usage1_)),
        usage2(std::move(usage2_)),
        gold(std::move(gold_)) {
    if (language.empty())
      throw Error("invalid-instance", "language tag must be non-empty");
  }

  std::string instance_id;
  std::string language;
  std::string lemma;
  Usage usage1;
  Usage usage2;
  GoldLabel gold;
};

enum class Split { train, dev, test };

std::string to_string(Split split);

class Dataset {
 public:
  Dataset() : split_(Split::train) {}
  Dataset(std::vector<JudgedInstance> instances, Split split);

  const std::vector<JudgedInstance>& instances() const { return instances_; }
  Split split() const { return split_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }

 private:
  std::vector<JudgedInstance> instances_;
  Split split_;
};

}  // namespace wic
