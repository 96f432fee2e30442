#include "causaloid/operational.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "causaloid/backend.hpp"
#include "causaloid/error.hpp"

namespace causaloid {

Region::Region(std::vector<LocationId> locations) : locations_(std::move(locations)) {
  std::sort(locations_.begin(), locations_.end());
  locations_.erase(std::unique(locations_.begin(), locations_.end()), locations_.end());
  if (locations_.empty()) fail(ErrorCode::InvalidArgument, "region must be non-empty");
}

bool Region::contains(LocationId x) const {
  return std::binary_search(locations_.begin(), locations_.end(), x);
}

bool Region::intersects(const Region& other) const {
  for (LocationId x : other.locations_)
    if (contains(x)) return true;
  return false;
}

Region Region::united(const Region& other) const {
  std::vector<LocationId> all = locations_;
  all.insert(all.end(), other.locations_.begin(), other.locations_.end());
  return Region(std::move(all));
}

std::string Region::to_string() const {
  std::string out = "{";
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(locations_[i]);
  }
  return out + "}";
}

std::vector<Card> FullPack::cards() const {
  std::vector<Card> out;
  for (LocationId x : locations) {
    const auto& outcomes = outcomes_per_location.at(x);
    for (ActionId a = 0; a < outcomes.size(); ++a)
      for (OutcomeId s = 0; s < outcomes[a]; ++s) out.push_back({x, a, s});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Card> FullPack::cards_in(const Region& region) const {
  auto all = cards();
  return restrict_to_region(all, region);
}

bool FullPack::valid(const Card& card) const {
  auto it = outcomes_per_location.find(card.x);
  if (it == outcomes_per_location.end()) return false;
  return card.a < it->second.size() && card.s < it->second[card.a];
}

ActionId ProcedureSpec::action_at(LocationId x) const {
  auto it = assignment_.find(x);
  if (it == assignment_.end())
    fail(ErrorCode::UnknownProcedure, "procedure has no action at location " + std::to_string(x));
  return it->second;
}

void ProcedureSpec::validate(const FullPack& pack) const {
  if (assignment_.size() != pack.locations.size())
    fail(ErrorCode::InvalidArgument, "procedure must assign an action to every location");
  for (LocationId x : pack.locations) {
    auto it = assignment_.find(x);
    if (it == assignment_.end())
      fail(ErrorCode::InvalidArgument, "procedure misses location " + std::to_string(x));
    if (it->second >= pack.actions_per_location.at(x))
      fail(ErrorCode::UnknownProcedure, "action " + std::to_string(it->second) +
                                            " does not exist at location " + std::to_string(x));
  }
}

std::vector<Card> ProcedureSpec::cards(const FullPack& pack) const {
  std::vector<Card> out;
  for (const auto& [x, a] : assignment_) {
    const auto& outcomes = pack.outcomes_per_location.at(x);
    for (OutcomeId s = 0; s < outcomes.at(a); ++s) out.push_back({x, a, s});
  }
  return out;
}

Stack::Stack(std::vector<Card> cards, ProcedureSpec tag)
    : cards_(std::move(cards)), tag_(std::move(tag)) {
  std::sort(cards_.begin(), cards_.end());
  for (std::size_t i = 1; i < cards_.size(); ++i)
    if (cards_[i].x == cards_[i - 1].x)
      fail(ErrorCode::InvalidArgument,
           "stack holds two cards at location " + std::to_string(cards_[i].x));
  const auto& assignment = tag_.assignment();
  if (cards_.size() != assignment.size())
    fail(ErrorCode::InvalidArgument, "stack must carry exactly one card per probed location");
  for (const Card& card : cards_) {
    auto it = assignment.find(card.x);
    if (it == assignment.end())
      fail(ErrorCode::InvalidArgument,
           "card at location " + std::to_string(card.x) + " is outside the procedure");
    if (it->second != card.a)
      fail(ErrorCode::InvalidArgument,
           "card action disagrees with procedure at location " + std::to_string(card.x));
  }
}

std::optional<Card> Stack::card_at(LocationId x) const {
  auto it = std::lower_bound(cards_.begin(), cards_.end(), Card{x, 0, 0});
  if (it == cards_.end() || it->x != x) return std::nullopt;
  return *it;
}

std::vector<Card> restrict_to_region(std::span<const Card> cards, const Region& region) {
  std::vector<Card> out;
  for (const Card& c : cards)
    if (region.contains(c.x)) out.push_back(c);
  return out;
}

bool CardMatch::matches(const Stack& stack) const {
  auto card = stack.card_at(x);
  if (!card || card->a != a) return false;
  return !s || card->s == *s;
}

FrequencyEstimate estimate_prob(std::span<const Stack> stacks, std::span<const CardMatch> target,
                                std::span<const CardMatch> condition) {
  FrequencyEstimate est;
  auto all = [](std::span<const CardMatch> matches, const Stack& stack) {
    return std::all_of(matches.begin(), matches.end(),
                       [&](const CardMatch& m) { return m.matches(stack); });
  };
  for (const Stack& stack : stacks) {
    if (!all(condition, stack)) continue;
    ++est.condition_count;
    if (all(target, stack)) ++est.joint_count;
  }
  if (est.condition_count == 0)
    fail(ErrorCode::ZeroConditionCount, "no stack matches the condition");
  est.probability =
      static_cast<double>(est.joint_count) / static_cast<double>(est.condition_count);
  return est;
}

std::vector<Stack> sample_stacks(const TheoryBackend& backend, const ProcedureSpec& procedure,
                                 std::size_t runs, std::uint64_t seed,
                                 std::span<const std::size_t> preparations) {
  if (runs == 0) fail(ErrorCode::InvalidArgument, "runs must be at least 1");
  const Layout& layout = backend.layout();
  procedure.validate(layout.full_pack());
  if (!preparations.empty() && preparations.size() != layout.wires().size())
    fail(ErrorCode::InvalidArgument, "one preparation index per wire expected");

  std::vector<ActionId> actions(layout.num_locations());
  for (const auto& [x, a] : procedure.assignment()) actions[x] = a;

  std::vector<Stack> stacks;
  stacks.reserve(runs);
  for (std::size_t run = 0; run < runs; ++run) {
    Rng rng = Rng::substream(seed, run);
    std::vector<Card> cards;
    cards.reserve(layout.num_locations());
    for (std::size_t w = 0; w < layout.wires().size(); ++w) {
      const std::size_t prep = preparations.empty() ? 0 : preparations[w];
      auto outcomes = backend.sample_wire(w, actions, prep, rng);
      const auto& locs = layout.wires()[w].locations;
      for (std::size_t i = 0; i < locs.size(); ++i)
        cards.push_back({locs[i], actions[locs[i]], outcomes[i]});
    }
    stacks.emplace_back(std::move(cards), procedure);
  }
  return stacks;
}

void write_stacks(std::ostream& out, std::span<const Stack> stacks) {
  out << "# causaloid stacks format_version=1\n";
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    if (i) out << '\n';
    for (const Card& c : stacks[i].cards()) out << c.x << ',' << c.a << ',' << c.s << '\n';
  }
}

std::vector<Stack> read_stacks(std::istream& in) {
  std::vector<Stack> stacks;
  std::vector<Card> current;
  auto flush = [&] {
    if (current.empty()) return;
    std::map<LocationId, ActionId> assignment;
    for (const Card& c : current) assignment[c.x] = c.a;
    stacks.emplace_back(std::move(current), ProcedureSpec(std::move(assignment)));
    current.clear();
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (line.empty()) {
      flush();
      continue;
    }
    std::istringstream fields(line);
    long long x = -1, a = -1, s = -1;
    char c1 = 0, c2 = 0;
    if (!(fields >> x >> c1 >> a >> c2 >> s) || c1 != ',' || c2 != ',' || x < 0 || a < 0 ||
        s < 0)
      fail(ErrorCode::SchemaError, "bad stack record at line " + std::to_string(line_no));
    current.push_back(
        {static_cast<LocationId>(x), static_cast<ActionId>(a), static_cast<OutcomeId>(s)});
  }
  flush();
  return stacks;
}

}  // namespace causaloid
