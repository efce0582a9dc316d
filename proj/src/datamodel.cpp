#include "wic/datamodel.hpp"

#include <unordered_set>

namespace wic {

LabelSpace label_space_of(const GoldLabel& gold) {
  if (std::holds_alternative<OrdinalLabel>(gold)) return LabelSpace::ordinal;
  if (std::holds_alternative<BinaryLabel>(gold)) return LabelSpace::binary;
  return LabelSpace::cosine;
}

std::string to_string(LabelSpace space) {
  switch (space) {
    case LabelSpace::ordinal: return "ordinal";
    case LabelSpace::binary: return "binary";
    case LabelSpace::cosine: return "cosine";
  }
  return "?";
}

LabelSpace label_space_from_string(const std::string& name) {
  if (name == "ordinal") return LabelSpace::ordinal;
  if (name == "binary") return LabelSpace::binary;
  if (name == "cosine") return LabelSpace::cosine;
  throw Error("invalid-label-space", "unknown label space '" + name + "'");
}

CosineTarget ordinal_to_cosine(OrdinalLabel label) {
  // Min-max scaling of the 1..4 scale onto [0,1]; 1/3 and 2/3 are kept as
  // the exact double quotients, never shortened decimals.
  return CosineTarget((static_cast<double>(label.value()) - 1.0) / 3.0);
}

CosineTarget binary_to_cosine(BinaryLabel label) {
  return CosineTarget(label.value() == 1 ? 1.0 : 1.0 / 3.0);
}

BinaryLabel ordinal_to_binary(OrdinalLabel label) {
  return BinaryLabel(label.value() >= 3 ? 1 : 0);
}

OrdinalLabel binary_to_ordinal(BinaryLabel label) {
  return OrdinalLabel(label.value() == 1 ? 4 : 2);
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

Dataset::Dataset(std::vector<JudgedInstance> instances, Split split)
    : instances_(std::move(instances)), split_(split) {
  std::unordered_set<std::string> seen;
  seen.reserve(instances_.size());
  for (const auto& inst : instances_) {
    if (!seen.insert(inst.instance_id).second)
      throw Error("duplicate-id",
                  "instance id '" + inst.instance_id + "' occurs twice");
  }
}

}  // namespace wic
