#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpelm/linalg.hpp"

namespace hpelm {

enum class ActivationKind { linear, sigmoid, tanh, rbf_l1, rbf_l2, rbf_linf };

// Lowercase tokens: linear|sigmoid|tanh|rbf_l1|rbf_l2|rbf_linf.
std::string_view to_string(ActivationKind kind) noexcept;
ActivationKind parse_activation(std::string_view token);
constexpr bool is_rbf(ActivationKind kind) noexcept {
  return kind == ActivationKind::rbf_l1 || kind == ActivationKind::rbf_l2 ||
         kind == ActivationKind::rbf_linf;
}

struct GroupSpec {
  ActivationKind kind;
  std::size_t count;
  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

// Ordered neuron groups; H columns are the group blocks in this order.
class LayerSpec {
 public:
  LayerSpec() = default;
  explicit LayerSpec(std::vector<GroupSpec> groups);

  // "tanh:1000,rbf_l1:1000"
  static LayerSpec parse(std::string_view text);

  const std::vector<GroupSpec>& groups() const noexcept { return groups_; }
  std::size_t total() const noexcept;
  bool linear_only() const noexcept;

  // Round-trips through parse().
  std::string to_string() const;
  // Report form, e.g. "tanh(1000)+rbf_l1(1000)".
  std::string display() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;

 private:
  std::vector<GroupSpec> groups_;
};

// One instantiated block of hidden neurons. Projection kinds use
// weights (d × count) and biases; rbf kinds use centers (count × d) and
// widths.
struct NeuronGroup {
  ActivationKind kind = ActivationKind::linear;
  std::size_t count = 0;
  DenseMatrix weights;
  std::vector<double> biases;
  DenseMatrix centers;
  std::vector<double> widths;

  std::size_t input_dim() const noexcept;
  friend bool operator==(const NeuronGroup&, const NeuronGroup&) = default;
};

// Draws every group's random parameters. Neuron j of group g depends only on
// (seed, g, j) plus, for rbf kinds, the width scale computed from
// training_sample, so a layer that extends another with the same seed shares
// its leading neurons.
std::vector<NeuronGroup> instantiate(const LayerSpec& spec, std::size_t input_dim,
                                     const DenseMatrix& training_sample, std::uint64_t seed);

// Median pairwise distance (in the norm matching `kind`) among at most 256
// rows drawn from sample; 1 when there are no pairs or the median is zero.
double median_pairwise_distance(ActivationKind kind, const DenseMatrix& sample,
                                std::uint64_t seed);

DenseMatrix apply(const NeuronGroup& group, const DenseMatrix& x_block);
DenseMatrix build_hidden(std::span<const NeuronGroup> groups, const DenseMatrix& x_block);

}  // namespace hpelm
