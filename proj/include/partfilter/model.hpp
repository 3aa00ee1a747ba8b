#pragma once

#include <map>
#include <optional>
#include <string>

#include "partfilter/chain.hpp"
#include "partfilter/partition.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

/// A partition together with its cached stationary vector and a free-form
/// provenance record (truncation size, boundary rule, generator name, ...).
///
/// The stationary vector is present only when the base chain is irreducible
/// and aperiodic; reducible or periodic bases (permutation families, Birkhoff
/// partitions of the identity) are valid models without one.
using ModelMeta = std::map<std::string, std::string>;

class FilterModel {
 public:
  FilterModel() = default;

  explicit FilterModel(Partition partition, ModelMeta meta = {})
      : partition_(std::move(partition)), meta_(std::move(meta)) {
    const auto structure = check_irreducible_aperiodic(partition_.base());
    if (structure.irreducible && structure.aperiodic) stationary_ = stationary_vector(partition_.base());
  }

  FilterModel(Partition partition, ProbVector stationary, ModelMeta meta = {})
      : partition_(std::move(partition)), stationary_(std::move(stationary)), meta_(std::move(meta)) {
    const NonnegMatrix& p = partition_.base().matrix();
    if (stationary_->size() != p.rows()) throw InvariantError("stationary vector matches state space", "");
    const auto next = p.left_multiply(stationary_->coords());
    if (l1_distance(next, stationary_->coords()) > kStationaryTolerance)
      throw InvariantError("pi P = pi within 1e-8", "");
  }

  const Partition& partition() const noexcept { return partition_; }
  const TransitionMatrix& base() const noexcept { return partition_.base(); }
  std::size_t states() const noexcept { return partition_.states(); }
  const std::optional<ProbVector>& stationary() const noexcept { return stationary_; }
  const ModelMeta& meta() const noexcept { return meta_; }

 private:
  Partition partition_;
  std::optional<ProbVector> stationary_;
  ModelMeta meta_;
};

}  // namespace partfilter
