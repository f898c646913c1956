#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gatetrain {

/// When a training sample is allowed to change the weights.
enum class GatePolicy {
  Always,            // ordinary backprop: every sample
  PureMistake,       // only when the sample is misclassified now
  MemorizedMistake,  // misclassified now, or at any earlier visit
};

std::string_view to_string(GatePolicy policy);

/// Accepts "always" (or "backprop"), "pure", "memorized". Throws ConfigError.
GatePolicy parse_policy(std::string_view name);

/// One flag per sample id, set the first time the sample is misclassified
/// and never cleared.
class MistakeMemory {
 public:
  MistakeMemory() = default;
  explicit MistakeMemory(std::size_t n_samples) : flags_(n_samples, false) {}

  std::size_t size() const { return flags_.size(); }
  std::size_t true_count() const { return true_count_; }

  bool flagged(std::size_t sample_id) const;

  /// Sets the flag; returns its previous value.
  bool mark(std::size_t sample_id);

  /// New memory of `new_size` flags; flag i of this memory moves to
  /// old_to_new[i]. Used when a run continues on a larger dataset.
  MistakeMemory extended(std::size_t new_size, std::span<const std::size_t> old_to_new) const;

  bool operator==(const MistakeMemory&) const = default;

 private:
  std::vector<bool> flags_;
  std::size_t true_count_ = 0;
};

/// Records a mistake in `memory` under every policy, then returns whether the
/// policy opens the gate for this sample.
bool gate_decision(GatePolicy policy, std::size_t sample_id, std::size_t predicted,
                   std::size_t label, MistakeMemory& memory);

inline std::size_t unique_mistake_count(const MistakeMemory& memory) {
  return memory.true_count();
}

}  // namespace gatetrain
