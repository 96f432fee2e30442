#pragma once

// Raw operational records: cards, stacks, procedures and regions.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace causaloid {

using LocationId = std::uint32_t;
using ActionId = std::uint32_t;
using OutcomeId = std::uint32_t;

struct Card {
  LocationId x = 0;
  ActionId a = 0;
  OutcomeId s = 0;

  auto operator<=>(const Card&) const = default;
};

// Canonical (sorted, duplicate-free, non-empty) set of locations.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<LocationId> locations);
  static Region single(LocationId x) { return Region({x}); }

  const std::vector<LocationId>& locations() const { return locations_; }
  std::size_t size() const { return locations_.size(); }
  bool elementary() const { return locations_.size() == 1; }
  bool contains(LocationId x) const;
  bool intersects(const Region& other) const;
  LocationId least() const { return locations_.front(); }

  Region united(const Region& other) const;
  std::string to_string() const;

  auto operator<=>(const Region&) const = default;

 private:
  std::vector<LocationId> locations_;
};

// The full pack V: every (x, a, s) that can appear.
struct FullPack {
  std::vector<LocationId> locations;
  std::map<LocationId, std::size_t> actions_per_location;
  // outcomes_per_location[x][a] = number of outcomes of action a at x.
  std::map<LocationId, std::vector<std::size_t>> outcomes_per_location;

  std::vector<Card> cards() const;
  std::vector<Card> cards_in(const Region& region) const;
  bool valid(const Card& card) const;
};

// F: the action chosen at every location.
class ProcedureSpec {
 public:
  ProcedureSpec() = default;
  explicit ProcedureSpec(std::map<LocationId, ActionId> assignment)
      : assignment_(std::move(assignment)) {}

  const std::map<LocationId, ActionId>& assignment() const { return assignment_; }
  ActionId action_at(LocationId x) const;

  // Throws InvalidArgument unless the domain is exactly the pack's
  // locations and every action exists.
  void validate(const FullPack& pack) const;

  // All cards (x, F(x), s) for every outcome s.
  std::vector<Card> cards(const FullPack& pack) const;

  auto operator<=>(const ProcedureSpec&) const = default;

 private:
  std::map<LocationId, ActionId> assignment_;
};

// Y: what was seen in one run, tagged with what was done.
class Stack {
 public:
  Stack(std::vector<Card> cards, ProcedureSpec tag);

  const std::vector<Card>& cards() const { return cards_; }
  const ProcedureSpec& tag() const { return tag_; }
  std::optional<Card> card_at(LocationId x) const;

  bool operator==(const Stack&) const = default;

 private:
  std::vector<Card> cards_;  // sorted by location
  ProcedureSpec tag_;
};

std::vector<Card> restrict_to_region(std::span<const Card> cards, const Region& region);

// Matches a card at location x with action a and, when given, outcome s.
struct CardMatch {
  LocationId x = 0;
  ActionId a = 0;
  std::optional<OutcomeId> s;

  bool matches(const Stack& stack) const;
};

struct FrequencyEstimate {
  double probability = 0.0;
  std::size_t joint_count = 0;
  std::size_t condition_count = 0;
};

// Relative frequency N(target, condition) / N(condition).
FrequencyEstimate estimate_prob(std::span<const Stack> stacks,
                                std::span<const CardMatch> target,
                                std::span<const CardMatch> condition);

class TheoryBackend;

// `runs` tagged stacks under `procedure`. Run i draws from the substream
// (seed, i). preparations[w] picks the preparation on wire w (default 0).
std::vector<Stack> sample_stacks(const TheoryBackend& backend,
                                 const ProcedureSpec& procedure, std::size_t runs,
                                 std::uint64_t seed,
                                 std::span<const std::size_t> preparations = {});

// Debug dump: one `x,a,s` line per card, blank line between runs.
void write_stacks(std::ostream& out, std::span<const Stack> stacks);
std::vector<Stack> read_stacks(std::istream& in);

}  // namespace causaloid
