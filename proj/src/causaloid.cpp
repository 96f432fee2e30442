#include "causaloid/causaloid.hpp"

#include <algorithm>
#include <cmath>

#include "causaloid/error.hpp"

namespace causaloid {

Causaloid::Causaloid(std::string theory, Layout layout)
    : theory_(std::move(theory)), layout_(std::move(layout)) {}

void Causaloid::add(ElementaryEntry entry) {
  const Region& region = entry.lambda.region;
  if (!region.elementary())
    fail(ErrorCode::ContextMismatch, "elementary entry for non-elementary region " + region.to_string());
  const LocationId x = region.least();
  if (x >= layout_.num_locations())
    fail(ErrorCode::UnknownRegion, "region " + region.to_string() + " is not in the layout");
  const std::size_t labels = layout_.num_labels(x);
  if (entry.gamma.region != region || entry.gamma.size() != labels ||
      entry.lambda.omega.region != region || entry.lambda.omega.parent_size != labels ||
      static_cast<std::size_t>(entry.lambda.matrix.rows()) != labels ||
      static_cast<std::size_t>(entry.lambda.matrix.cols()) != entry.lambda.omega.size())
    fail(ErrorCode::ContextMismatch, "Lambda of region " + region.to_string() + " has the wrong shape");
  elementary_.insert_or_assign(x, std::move(entry));
}

void Causaloid::add(CompositeEntry entry) {
  const auto& lambda = entry.lambda;
  const auto& constituents = lambda.composite.constituents();
  if (lambda.factors.size() != constituents.size())
    fail(ErrorCode::ContextMismatch, "one factor Omega per constituent expected");
  for (std::size_t i = 0; i < constituents.size(); ++i) {
    if (!constituents[i].elementary())
      fail(ErrorCode::InvalidArgument,
           "composite constituents must be elementary, got " + constituents[i].to_string());
    const auto it = elementary_.find(constituents[i].least());
    if (it == elementary_.end())
      fail(ErrorCode::MissingEntry, "no entry for constituent " + constituents[i].to_string());
    if (it->second.lambda.omega != lambda.factors[i])
      fail(ErrorCode::ContextMismatch,
           "factor Omega of " + constituents[i].to_string() + " differs from the stored one");
  }
  const std::size_t product = product_of(lambda.factors).size();
  if (lambda.omega.region != lambda.composite.united() || lambda.omega.parent_size != product ||
      static_cast<std::size_t>(lambda.matrix.rows()) != product ||
      static_cast<std::size_t>(lambda.matrix.cols()) != lambda.omega.size())
    fail(ErrorCode::ContextMismatch,
         "Lambda of composite " + lambda.composite.united().to_string() + " has the wrong shape");
  composites_.insert_or_assign(lambda.composite.united(), std::move(entry));
}

void Causaloid::add_rule(MetaRule rule) {
  for (const auto& c : rule.regions)
    for (const auto& r : c.constituents())
      if (!r.elementary() || !elementary_.count(r.least()))
        fail(ErrorCode::MissingEntry, "rule " + rule.id + " refers to missing region " + r.to_string());
  rules_.push_back(std::move(rule));
}

const ElementaryEntry& Causaloid::elementary(LocationId x) const {
  const auto it = elementary_.find(x);
  if (it == elementary_.end())
    fail(ErrorCode::MissingEntry, "no entry for location " + std::to_string(x));
  return it->second;
}

CompositionalLambda Causaloid::composite(const Region& united) const {
  if (const auto it = composites_.find(united); it != composites_.end()) return it->second.lambda;
  for (const auto& rule : rules_) {
    if (rule.id != kRuleTensorFactorization) continue;
    for (const auto& c : rule.regions)
      if (c.united() == united) {
        std::vector<OmegaSet> factors;
        for (const auto& r : c.constituents()) factors.push_back(omega(r.least()));
        return factorized_lambda(c, std::move(factors));
      }
  }
  fail(ErrorCode::MissingEntry, "no stored or deducible Lambda for region " + united.to_string());
}

bool Causaloid::available(const Region& united) const {
  if (united.elementary()) return elementary_.count(united.least()) > 0;
  if (stores(united)) return true;
  for (const auto& rule : rules_)
    if (rule.id == kRuleTensorFactorization)
      for (const auto& c : rule.regions)
        if (c.united() == united) return true;
  return false;
}

GammaSet Causaloid::gamma(const Region& region) const { return enumerate_labels(layout_, region); }

CompositionalLambda factorized_lambda(const CompositeRegion& composite,
                                      std::vector<OmegaSet> factors) {
  const std::size_t n = product_of(factors).size();
  OmegaSet omega{composite.united(), {}, n};
  for (std::size_t i = 0; i < n; ++i) omega.indices.push_back(i);
  const auto size = static_cast<Eigen::Index>(n);
  return CompositionalLambda{composite, std::move(factors), std::move(omega),
                             Eigen::MatrixXd::Identity(size, size)};
}

CausaloidBuild build_causaloid(const TheoryBackend& backend,
                               std::span<const CompositeRegion> composites,
                               const CompressionOptions& options) {
  CausaloidBuild out{Causaloid(std::string(backend.theory()), backend.layout()), {}, {}};
  for (LocationId x = 0; x < backend.layout().num_locations(); ++x) {
    out.regions.push_back(compress_region(backend, Region::single(x), options));
    out.causaloid.add(ElementaryEntry{out.regions.back().gamma, out.regions.back().lambda});
  }
  for (const auto& c : composites) {
    std::vector<TomographicLambda> factors;
    for (const auto& r : c.constituents()) {
      if (!r.elementary())
        fail(ErrorCode::InvalidArgument,
             "composite constituents must be elementary, got " + r.to_string());
      factors.push_back(out.causaloid.elementary(r.least()).lambda);
    }
    out.composites.push_back(compress_composite(backend, c, factors, options));
    out.causaloid.add(CompositeEntry{out.composites.back().lambda});
  }
  return out;
}

namespace {

Eigen::MatrixXd rebase(const Eigen::MatrixXd& lambda, const OmegaSet& old_omega,
                       const OmegaSet& new_omega) {
  if (new_omega.region != old_omega.region || new_omega.parent_size != old_omega.parent_size ||
      new_omega.size() != old_omega.size())
    fail(ErrorCode::ContextMismatch, "new Omega must be a same-size subset of the same parent set");
  for (std::size_t i = 0; i < new_omega.size(); ++i)
    if (new_omega.indices[i] >= new_omega.parent_size ||
        (i > 0 && new_omega.indices[i] <= new_omega.indices[i - 1]))
      fail(ErrorCode::InvalidArgument, "new Omega indices must be strictly increasing and in range");
  const auto k = static_cast<Eigen::Index>(new_omega.size());
  Eigen::MatrixXd restriction(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    restriction.row(j) = lambda.row(static_cast<Eigen::Index>(new_omega.indices[static_cast<std::size_t>(j)]));
  if (k == 0) return lambda;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(restriction);
  const auto& s = svd.singularValues();
  const double smin = s(k - 1);
  if (!(smin > 0.0) || s(0) / smin > 1e12)
    fail(ErrorCode::SingularTransform,
         "new fiducial rows are not independent (condition number " +
             (smin > 0.0 ? std::to_string(s(0) / smin) : std::string("inf")) + ")");
  Eigen::MatrixXd out =
      restriction.transpose().fullPivLu().solve(lambda.transpose()).transpose();
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto row = static_cast<Eigen::Index>(new_omega.indices[static_cast<std::size_t>(j)]);
    out.row(row).setZero();
    out(row, j) = 1.0;
  }
  return out;
}

}  // namespace

TomographicLambda change_omega_basis(const TomographicLambda& lambda, const OmegaSet& new_omega) {
  return TomographicLambda{lambda.region, new_omega, rebase(lambda.matrix, lambda.omega, new_omega)};
}

CompositionalLambda change_omega_basis(const CompositionalLambda& lambda,
                                       const OmegaSet& new_omega) {
  return CompositionalLambda{lambda.composite, lambda.factors, new_omega,
                             rebase(lambda.matrix, lambda.omega, new_omega)};
}

StateVector change_state_basis(const StateVector& p, const Eigen::MatrixXd& lambda,
                               const OmegaSet& new_omega) {
  if (p.context.parent_size != static_cast<std::size_t>(lambda.rows()) ||
      p.context.size() != static_cast<std::size_t>(lambda.cols()) ||
      new_omega.parent_size != p.context.parent_size)
    fail(ErrorCode::ContextMismatch, "state and Lambda live on different fiducial sets");
  StateVector out{new_omega, Eigen::VectorXd(static_cast<Eigen::Index>(new_omega.size()))};
  for (std::size_t j = 0; j < new_omega.size(); ++j)
    out.components(static_cast<Eigen::Index>(j)) =
        lambda.row(static_cast<Eigen::Index>(new_omega.indices[j])).dot(p.components);
  return out;
}

RVector r_vector_joint(const Causaloid& causaloid, const Region& region,
                       std::span<const std::size_t> labels) {
  if (labels.size() != region.size())
    fail(ErrorCode::InvalidArgument, "one label per location of " + region.to_string() + " expected");
  if (region.elementary()) return r_vector(labels[0], causaloid.elementary(region.least()).lambda);
  const CompositionalLambda lambda = causaloid.composite(region);
  Eigen::VectorXd product = Eigen::VectorXd::Ones(1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const RVector r = r_vector(labels[i], causaloid.elementary(region.locations()[i]).lambda);
    Eigen::VectorXd next(product.size() * r.components.size());
    for (Eigen::Index a = 0; a < product.size(); ++a)
      next.segment(a * r.components.size(), r.components.size()) = product(a) * r.components;
    product = std::move(next);
  }
  return RVector{lambda.omega, lambda.matrix.transpose() * product};
}

double evaluate_joint(const Causaloid& causaloid, const Region& region,
                      std::span<const std::size_t> labels, const StateVector& state) {
  return born_rule(r_vector_joint(causaloid, region, labels), state);
}

namespace {

// For each component of r, the Omega_x position of every location in r's region.
std::vector<std::vector<std::size_t>> component_digits(const RVector& r, const Causaloid& causaloid) {
  const Region& region = r.context.region;
  std::vector<std::vector<std::size_t>> out;
  if (region.elementary()) {
    if (r.context != causaloid.omega(region.least()))
      fail(ErrorCode::ContextMismatch, "r-vector of " + region.to_string() + " uses a foreign Omega");
    for (std::size_t k = 0; k < r.context.size(); ++k) out.push_back({k});
    return out;
  }
  const CompositionalLambda lambda = causaloid.composite(region);
  if (r.context != lambda.omega)
    fail(ErrorCode::ContextMismatch, "r-vector of " + region.to_string() + " uses a foreign Omega");
  const ProductIndex product = product_of(lambda.factors);
  for (std::size_t k : r.context.indices) out.push_back(product.decode(k));
  return out;
}

}  // namespace

RVector causaloid_product(const RVector& r1, const RVector& r2, const Causaloid& causaloid) {
  const Region& a = r1.context.region;
  const Region& b = r2.context.region;
  if (a.intersects(b))
    fail(ErrorCode::InvalidArgument,
         "Causaloid product of overlapping regions " + a.to_string() + " and " + b.to_string());
  if (static_cast<std::size_t>(r1.components.size()) != r1.context.size() ||
      static_cast<std::size_t>(r2.components.size()) != r2.context.size())
    fail(ErrorCode::ContextMismatch, "r-vector length differs from its Omega");
  const Region united = a.united(b);
  const CompositionalLambda lambda = causaloid.composite(united);
  const ProductIndex product = product_of(lambda.factors);
  const auto digits_a = component_digits(r1, causaloid);
  const auto digits_b = component_digits(r2, causaloid);

  // Where each location of a and b sits among the composite's locations.
  const auto& locs = united.locations();
  auto slots = [&](const Region& r) {
    std::vector<std::size_t> out;
    for (LocationId x : r.locations())
      out.push_back(static_cast<std::size_t>(std::lower_bound(locs.begin(), locs.end(), x) - locs.begin()));
    return out;
  };
  const auto slots_a = slots(a);
  const auto slots_b = slots(b);

  RVector out{lambda.omega, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lambda.omega.size()))};
  std::vector<std::size_t> digits(locs.size());
  for (std::size_t i = 0; i < digits_a.size(); ++i) {
    const double ca = r1.components(static_cast<Eigen::Index>(i));
    if (ca == 0.0) continue;
    for (std::size_t s = 0; s < slots_a.size(); ++s) digits[slots_a[s]] = digits_a[i][s];
    for (std::size_t j = 0; j < digits_b.size(); ++j) {
      const double cb = r2.components(static_cast<Eigen::Index>(j));
      if (cb == 0.0) continue;
      for (std::size_t s = 0; s < slots_b.size(); ++s) digits[slots_b[s]] = digits_b[j][s];
      out.components +=
          (ca * cb) * lambda.matrix.row(static_cast<Eigen::Index>(product.encode(digits))).transpose();
    }
  }
  return out;
}

Causaloid meta_compress(const Causaloid& causaloid, std::span<const RuleRequest> rules) {
  std::vector<MetaRule> added;
  std::vector<Region> dropped;
  for (const auto& request : rules) {
    if (request.id == kRuleIdentity) {
      for (const auto& r : request.regions)
        if (!causaloid.available(r))
          fail(ErrorCode::RuleInapplicable, "rule R0: no entry for region " + r.to_string());
      added.push_back(MetaRule{request.id, {}});
    } else if (request.id == kRuleTensorFactorization) {
      auto applies = [](const CompositionalLambda& l) {
        return l.omega.size() == product_of(l.factors).size();
      };
      MetaRule rule{request.id, {}};
      if (request.regions.empty()) {
        for (const auto& [united, entry] : causaloid.composite_entries())
          if (applies(entry.lambda)) rule.regions.push_back(entry.lambda.composite);
      } else {
        for (const auto& r : request.regions) {
          if (!causaloid.stores(r))
            fail(ErrorCode::RuleInapplicable, "rule R1: no stored entry for region " + r.to_string());
          const auto& lambda = causaloid.composite_entries().at(r).lambda;
          if (!applies(lambda))
            fail(ErrorCode::RuleInapplicable,
                 "rule R1 does not apply to region " + r.to_string() + ": |Omega| = " +
                     std::to_string(lambda.omega.size()) + " < " +
                     std::to_string(product_of(lambda.factors).size()));
          rule.regions.push_back(lambda.composite);
        }
      }
      for (const auto& c : rule.regions) dropped.push_back(c.united());
      added.push_back(std::move(rule));
    } else {
      fail(ErrorCode::RuleInapplicable, "unknown rule " + request.id);
    }
  }
  Causaloid out(causaloid.theory(), causaloid.layout());
  for (const auto& [x, entry] : causaloid.elementary_entries()) out.add(entry);
  for (const auto& [united, entry] : causaloid.composite_entries())
    if (std::find(dropped.begin(), dropped.end(), united) == dropped.end()) out.add(entry);
  for (const auto& rule : causaloid.rules()) out.add_rule(rule);
  for (auto& rule : added) out.add_rule(std::move(rule));
  return out;
}

Causaloid expand(const Causaloid& causaloid) {
  Causaloid out(causaloid.theory(), causaloid.layout());
  for (const auto& [x, entry] : causaloid.elementary_entries()) out.add(entry);
  for (const auto& [united, entry] : causaloid.composite_entries()) out.add(entry);
  for (const auto& rule : causaloid.rules())
    for (const auto& c : rule.regions)
      if (!out.stores(c.united())) out.add(CompositeEntry{causaloid.composite(c.united())});
  return out;
}

std::vector<MediatorInfo> mediators(const TheoryBackend& backend, const CompositeRegion& composite,
                                    const CompressionOptions& options) {
  const Region& united = composite.united();
  std::vector<MediatorInfo> out;
  for (const auto& wire : backend.layout().wires()) {
    std::optional<std::size_t> first, last;
    for (std::size_t i = 0; i < wire.locations.size(); ++i)
      if (united.contains(wire.locations[i])) {
        if (!first) first = i;
        last = i;
      }
    if (!first) continue;
    for (std::size_t i = *first + 1; i < *last; ++i) {
      const LocationId y = wire.locations[i];
      if (united.contains(y)) continue;
      const auto compression = compress_region(backend, Region::single(y), options);
      MediatorInfo info{y, compression.lambda.omega.size(), backend.full_operation_dimension(y), false};
      info.informationally_complete = info.omega_size >= info.full_dimension;
      out.push_back(info);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const MediatorInfo& a, const MediatorInfo& b) { return a.location < b.location; });
  return out;
}

}  // namespace causaloid
