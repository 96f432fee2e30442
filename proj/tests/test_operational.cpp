#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "causaloid/error.hpp"
#include "causaloid/operational.hpp"
#include "causaloid/rng.hpp"
#include "support.hpp"

using namespace causaloid;
namespace ts = testing_support;

namespace {

Stack stack_of(std::vector<Card> cards) {
  std::map<LocationId, ActionId> f;
  for (const auto& c : cards) f[c.x] = c.a;
  return Stack(std::move(cards), ProcedureSpec(f));
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("region canonical form") {
  const Region r({3, 1, 3, 2});
  CHECK(r.locations() == std::vector<LocationId>{1, 2, 3});
  CHECK_FALSE(r.elementary());
  CHECK(Region::single(4).elementary());
  CHECK(r.contains(2));
  CHECK_FALSE(r.contains(4));
  CHECK(r.intersects(Region({3, 7})));
  CHECK_FALSE(r.intersects(Region({0, 7})));
  CHECK(r.united(Region({0})).locations() == std::vector<LocationId>{0, 1, 2, 3});
  CHECK(code_of([] { Region(std::vector<LocationId>{}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("restrict_to_region") {
  const std::vector<Card> cards{{1, 0, 0}, {2, 1, 1}};
  CHECK(restrict_to_region(cards, Region({1})) == std::vector<Card>{{1, 0, 0}});
  CHECK(restrict_to_region(std::vector<Card>{}, Region({1, 2})).empty());

  // Three-polariser run: locations 1..3, region {2,3} keeps exactly two cards.
  const std::vector<Card> run{{1, 0, 0}, {2, 2, 1}, {3, 1, 0}};
  const auto kept = restrict_to_region(run, Region({2, 3}));
  CHECK(kept == std::vector<Card>{{2, 2, 1}, {3, 1, 0}});
  CHECK(run.size() == 3);
}

TEST_CASE("stack construction rejects malformed runs") {
  ProcedureSpec f = ts::procedure({{0, 1}, {1, 0}});
  CHECK_NOTHROW(Stack({{0, 1, 0}, {1, 0, 1}}, f));
  // missing card
  CHECK(code_of([&] { Stack({{0, 1, 0}}, f); }) == ErrorCode::InvalidArgument);
  // action disagrees with the tag
  CHECK(code_of([&] { Stack({{0, 0, 0}, {1, 0, 1}}, f); }) == ErrorCode::InvalidArgument);
  // two cards at one location
  CHECK(code_of([&] { Stack({{0, 1, 0}, {0, 1, 1}}, ts::procedure({{0, 1}})); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("full pack and procedures") {
  const auto backend = ts::polariser_chain(2, {0, 45});
  const FullPack pack = backend.layout().full_pack();
  CHECK(pack.cards().size() == 8);
  for (const auto& c : pack.cards()) CHECK(pack.valid(c));
  CHECK_FALSE(pack.valid({0, 2, 0}));
  ProcedureSpec f = ts::procedure({{0, 1}, {1, 0}});
  CHECK_NOTHROW(f.validate(pack));
  CHECK(f.cards(pack).size() == 4);
  CHECK(code_of([&] { ts::procedure({{0, 1}}).validate(pack); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { ts::procedure({{0, 5}, {1, 0}}).validate(pack); }) ==
        ErrorCode::UnknownProcedure);
}

TEST_CASE("estimate_prob counts") {
  std::vector<Stack> stacks{stack_of({{0, 0, 0}, {1, 0, 0}}), stack_of({{0, 0, 0}, {1, 0, 1}}),
                            stack_of({{0, 0, 1}, {1, 0, 0}}), stack_of({{0, 0, 1}, {1, 0, 1}})};
  const std::vector<CardMatch> cond{{0, 0, 0}};
  const std::vector<CardMatch> target{{1, 0, 1}};
  const auto est = estimate_prob(stacks, target, cond);
  CHECK(est.condition_count == 2);
  CHECK(est.joint_count == 1);
  CHECK(est.probability == doctest::Approx(0.5));

  const std::vector<CardMatch> impossible{{0, 3, std::nullopt}};
  CHECK(code_of([&] { estimate_prob(stacks, target, impossible); }) ==
        ErrorCode::ZeroConditionCount);
}

TEST_CASE("sampling shape and determinism") {
  const auto backend = ts::polariser_chain(3, {0, 30, 60, 90});
  const ProcedureSpec f = ts::procedure({{0, 0}, {1, 1}, {2, 2}});
  const auto one = sample_stacks(backend, f, 1, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0].cards().size() == 3);
  CHECK(sample_stacks(backend, f, 200, 42) == sample_stacks(backend, f, 200, 42));
  CHECK(sample_stacks(backend, f, 200, 42) != sample_stacks(backend, f, 200, 43));
  CHECK(code_of([&] { sample_stacks(backend, f, 0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("deterministic classical channel samples identical stacks") {
  // read-and-write bit at one location fed with point input 1
  auto backend = ts::classical_channel_chain(2, 1);
  const ProcedureSpec f = ts::procedure({{0, 0}});
  const std::vector<std::size_t> prep{1};
  const auto stacks = sample_stacks(backend, f, 50, 3, prep);
  for (const auto& s : stacks) CHECK(s == stacks.front());
  CHECK(stacks.front().cards().front().s == 1);
}

TEST_CASE("property: stack cards sit inside the procedure and the region") {
  const auto backend = ts::polariser_chain(3, {0, 30, 60, 90});
  const FullPack pack = backend.layout().full_pack();
  const ProcedureSpec f = ts::procedure({{0, 3}, {1, 1}, {2, 0}});
  const auto procedure_cards = f.cards(pack);
  const auto stacks = sample_stacks(backend, f, 300, 99);
  for (const Region& r : {Region({0}), Region({1, 2}), Region({0, 2})}) {
    const auto universe = pack.cards_in(r);
    const auto f_r = restrict_to_region(procedure_cards, r);
    for (const auto& s : stacks) {
      for (const auto& c : restrict_to_region(s.cards(), r)) {
        CHECK(std::find(f_r.begin(), f_r.end(), c) != f_r.end());
        CHECK(std::find(universe.begin(), universe.end(), c) != universe.end());
      }
    }
    for (const auto& c : f_r) CHECK(std::find(universe.begin(), universe.end(), c) != universe.end());
  }
}

TEST_CASE("property: estimate_prob is permutation invariant and counts are ordered") {
  const auto backend = ts::polariser_chain(2, {0, 45});
  const ProcedureSpec f = ts::procedure({{0, 1}, {1, 0}});
  auto stacks = sample_stacks(backend, f, 500, 5);
  const std::vector<CardMatch> cond{{0, 1, 0}};
  const std::vector<CardMatch> target{{1, 0, 0}};
  const auto base = estimate_prob(stacks, target, cond);
  CHECK(base.joint_count <= base.condition_count);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = stacks.size(); i > 1; --i)
      std::swap(stacks[i - 1], stacks[rng.next() % i]);
    const auto est = estimate_prob(stacks, target, cond);
    CHECK(est.joint_count == base.joint_count);
    CHECK(est.condition_count == base.condition_count);
    CHECK(est.probability == base.probability);
  }
}

TEST_CASE("frequency converges to the Malus value") {
  const auto backend = ts::single_polariser(30.0);
  const ProcedureSpec f = ts::procedure({{0, 0}});
  const auto stacks = sample_stacks(backend, f, 100000, 2024);
  const std::vector<CardMatch> target{{0, 0, 0}};
  const std::vector<CardMatch> cond{{0, 0, std::nullopt}};
  const auto est = estimate_prob(stacks, target, cond);
  CHECK(est.condition_count == 100000);
  CHECK(std::abs(est.probability - ts::malus(30.0)) <= 0.01);
}

TEST_CASE("stack text dump round-trips") {
  const auto backend = ts::polariser_chain(3, {0, 30});
  const auto stacks = sample_stacks(backend, ts::procedure({{0, 0}, {1, 1}, {2, 0}}), 25, 8);
  std::stringstream buf;
  write_stacks(buf, stacks);
  CHECK(read_stacks(buf) == stacks);
  std::istringstream bad("0,1\n");
  CHECK(code_of([&] { read_stacks(bad); }) == ErrorCode::SchemaError);
}

TEST_CASE("rng substreams are reproducible") {
  Rng a = Rng::substream(5, 9), b = Rng::substream(5, 9), c = Rng::substream(5, 10);
  const auto x = a.next();
  CHECK(x == b.next());
  CHECK(x != c.next());
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}
