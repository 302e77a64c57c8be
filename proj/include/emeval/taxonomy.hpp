#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emeval/errors.hpp"
#include "emeval/label.hpp"

namespace emeval {

// Level 1: maps inflected emotion words to a base form. An irregular table is
// consulted first, then ordered suffix rewrite rules. Lookup repeats until it
// reaches a fixed point, so every output of apply() maps to itself; validate()
// checks the invariants that make that terminate.
struct LemmaMap {
  std::map<std::string, std::string> irregular;
  // Ordered (suffix, replacement) rules; the first match wins per step.
  std::vector<std::pair<std::string, std::string>> suffix_rules;

  // A suffix rule fires only if it leaves a stem of at least this many bytes.
  static constexpr std::size_t kMinStem = 2;

  EmotionLabel apply(const EmotionLabel& label) const {
    EmotionLabel cur = label;
    for (;;) {
      const EmotionLabel next = apply_once(cur);
      if (next == cur) return cur;
      cur = next;
    }
  }

  EmotionLabel apply_once(const EmotionLabel& label) const {
    if (auto it = irregular.find(label); it != irregular.end()) return it->second;
    for (const auto& [suffix, replacement] : suffix_rules) {
      if (label.size() >= suffix.size() + kMinStem &&
          label.compare(label.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return label.substr(0, label.size() - suffix.size()) + replacement;
      }
    }
    return label;
  }

  void validate() const {
    for (const auto& [from, to] : irregular) {
      if (apply_once(to) != to) {
        throw InvariantViolation("lemma target \"" + to + "\" is not a fixed point", to);
      }
    }
    for (const auto& [suffix, replacement] : suffix_rules) {
      if (suffix.empty()) throw InvariantViolation("empty lemma suffix rule");
      if (replacement.size() >= suffix.size()) {
        throw InvariantViolation(
            "lemma rule \"" + suffix + "\" -> \"" + replacement +
                "\" does not shorten the word",
            suffix);
      }
    }
  }
};

// Level 2: maps synonyms to a unified label. Unknown labels pass through.
struct SynonymMap {
  std::map<EmotionLabel, EmotionLabel> entries;

  EmotionLabel apply(const EmotionLabel& label) const {
    auto it = entries.find(label);
    return it == entries.end() ? label : it->second;
  }

  // Canonical targets must not themselves map elsewhere (one-step closure).
  void validate() const {
    for (const auto& [from, to] : entries) {
      auto it = entries.find(to);
      if (it != entries.end() && it->second != to) {
        throw InvariantViolation(
            "synonym target \"" + to + "\" maps onward to \"" + it->second + "\"", to);
      }
    }
  }
};

struct WheelSector {
  EmotionLabel inner;
  LabelSet outer;
};

// Level 3: a wheel maps nuanced outer labels to their sector's core (inner)
// label. Inner labels and unknown labels pass through.
class EmotionWheel {
 public:
  EmotionWheel(std::string name, std::vector<WheelSector> sectors)
      : name_(std::move(name)), sectors_(std::move(sectors)) {
    if (sectors_.empty()) {
      throw InvariantViolation("wheel \"" + name_ + "\" must have at least one sector");
    }
    std::map<EmotionLabel, std::size_t> inner_index;
    for (std::size_t i = 0; i < sectors_.size(); ++i) {
      const auto& inner = sectors_[i].inner;
      if (!inner_index.emplace(inner, i).second) {
        throw InvariantViolation("duplicate inner label \"" + inner + "\"", inner);
      }
    }
    for (std::size_t i = 0; i < sectors_.size(); ++i) {
      for (const auto& outer : sectors_[i].outer) {
        if (auto it = inner_index.find(outer); it != inner_index.end() && it->second != i) {
          throw InvariantViolation(
              "label \"" + outer + "\" is inner in one sector and outer in another", outer);
        }
        if (!outer_to_inner_.emplace(outer, sectors_[i].inner).second) {
          throw InvariantViolation(
              "outer label \"" + outer + "\" appears in two sectors", outer);
        }
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<WheelSector>& sectors() const noexcept { return sectors_; }

  EmotionLabel apply(const EmotionLabel& label) const {
    auto it = outer_to_inner_.find(label);
    return it == outer_to_inner_.end() ? label : it->second;
  }

 private:
  std::string name_;
  std::vector<WheelSector> sectors_;
  std::map<EmotionLabel, EmotionLabel> outer_to_inner_;
};

inline EmotionLabel apply_lemma(const EmotionLabel& label, const LemmaMap& m) {
  return m.apply(label);
}

inline EmotionLabel apply_synonym(const EmotionLabel& label, const SynonymMap& m) {
  return m.apply(label);
}

inline EmotionLabel apply_wheel(const EmotionLabel& label, const EmotionWheel& w) {
  return w.apply(label);
}

// The full three-level grouping: base form, then synonym, then one of K
// wheels. Wheel indices are zero-based.
struct GroupingPipeline {
  LemmaMap lemma;
  SynonymMap synonyms;
  std::vector<EmotionWheel> wheels;

  std::size_t wheel_count() const noexcept { return wheels.size(); }

  void validate() const {
    lemma.validate();
    synonyms.validate();
    if (wheels.empty()) throw InvariantViolation("grouping pipeline needs at least one wheel");
    std::set<std::string> names;
    for (const auto& w : wheels) {
      if (!names.insert(w.name()).second) {
        throw InvariantViolation("duplicate wheel name \"" + w.name() + "\"", w.name());
      }
    }
  }

  EmotionLabel group_label(const EmotionLabel& label, std::size_t wheel) const {
    if (wheel >= wheels.size()) {
      throw IndexOutOfRange("wheel index " + std::to_string(wheel) + " out of range (K=" +
                            std::to_string(wheels.size()) + ")");
    }
    return wheels[wheel].apply(synonyms.apply(lemma.apply(label)));
  }

  LabelSet group(const LabelSet& labels, std::size_t wheel) const {
    LabelSet out;
    for (const auto& label : labels) out.insert(group_label(label, wheel));
    return out;
  }
};

}  // namespace emeval
