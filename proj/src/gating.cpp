#include "gatetrain/gating.hpp"

#include <string>

#include "gatetrain/errors.hpp"

namespace gatetrain {

std::string_view to_string(GatePolicy policy) {
  switch (policy) {
    case GatePolicy::Always:
      return "always";
    case GatePolicy::PureMistake:
      return "pure";
    case GatePolicy::MemorizedMistake:
      return "memorized";
  }
  return "?";
}

GatePolicy parse_policy(std::string_view name) {
  if (name == "always" || name == "backprop") return GatePolicy::Always;
  if (name == "pure") return GatePolicy::PureMistake;
  if (name == "memorized") return GatePolicy::MemorizedMistake;
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected always, pure or memorized)");
}

bool MistakeMemory::flagged(std::size_t sample_id) const {
  if (sample_id >= flags_.size()) {
    throw IndexError("sample id " + std::to_string(sample_id) + " outside memory of size " +
                     std::to_string(flags_.size()));
  }
  return flags_[sample_id];
}

bool MistakeMemory::mark(std::size_t sample_id) {
  const bool was = flagged(sample_id);
  if (!was) {
    flags_[sample_id] = true;
    ++true_count_;
  }
  return was;
}

MistakeMemory MistakeMemory::extended(std::size_t new_size,
                                      std::span<const std::size_t> old_to_new) const {
  if (old_to_new.size() != flags_.size()) {
    throw ShapeError("id mapping must cover every existing flag");
  }
  MistakeMemory out(new_size);
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i]) out.mark(old_to_new[i]);
  }
  return out;
}

bool gate_decision(GatePolicy policy, std::size_t sample_id, std::size_t predicted,
                   std::size_t label, MistakeMemory& memory) {
  const bool mistake = predicted != label;
  const bool remembered = mistake ? (memory.mark(sample_id), true) : memory.flagged(sample_id);
  switch (policy) {
    case GatePolicy::Always:
      return true;
    case GatePolicy::PureMistake:
      return mistake;
    case GatePolicy::MemorizedMistake:
      return remembered;
  }
  return true;
}

}  // namespace gatetrain
