#include "hpelm/activation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "hpelm/error.hpp"
#include "hpelm/rng.hpp"

namespace hpelm {

namespace {

constexpr std::array<std::pair<ActivationKind, std::string_view>, 6> kNames{{
    {ActivationKind::linear, "linear"},
    {ActivationKind::sigmoid, "sigmoid"},
    {ActivationKind::tanh, "tanh"},
    {ActivationKind::rbf_l1, "rbf_l1"},
    {ActivationKind::rbf_l2, "rbf_l2"},
    {ActivationKind::rbf_linf, "rbf_linf"},
}};

constexpr std::size_t kWidthSampleRows = 256;
constexpr std::uint64_t kWidthStream = ~std::uint64_t{0};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Squared distance in the norm belonging to `kind`.
double squared_distance(ActivationKind kind, std::span<const double> x, std::span<const double> c) {
  double acc = 0.0;
  switch (kind) {
    case ActivationKind::rbf_l1:
      for (std::size_t k = 0; k < x.size(); ++k) acc += std::abs(x[k] - c[k]);
      return acc * acc;
    case ActivationKind::rbf_l2:
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - c[k];
        acc += d * d;
      }
      return acc;
    case ActivationKind::rbf_linf:
      for (std::size_t k = 0; k < x.size(); ++k) acc = std::max(acc, std::abs(x[k] - c[k]));
      return acc * acc;
    default:
      return 0.0;
  }
}

void apply_into(const NeuronGroup& group, const DenseMatrix& x, DenseMatrix& out,
                std::size_t col0) {
  if (x.cols() != group.input_dim()) {
    throw ShapeError("activation: input has " + std::to_string(x.cols()) +
                     " features, group expects " + std::to_string(group.input_dim()));
  }
  const std::size_t n = group.count;
  if (is_rbf(group.kind)) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto xi = x.row(i);
      auto oi = out.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        oi[col0 + j] = std::exp(-squared_distance(group.kind, xi, group.centers.row(j)) /
                                group.widths[j]);
      }
    }
    return;
  }
  const DenseMatrix z = matmul(x, group.weights);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto zi = z.row(i);
    auto oi = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double v = zi[j] + group.biases[j];
      switch (group.kind) {
        case ActivationKind::linear:
          oi[col0 + j] = v;
          break;
        case ActivationKind::sigmoid:
          oi[col0 + j] = 1.0 / (1.0 + std::exp(-v));
          break;
        case ActivationKind::tanh:
          oi[col0 + j] = std::tanh(v);
          break;
        default:
          break;
      }
    }
  }
}

}  // namespace

std::string_view to_string(ActivationKind kind) noexcept {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view token) {
  token = trim(token);
  for (const auto& [k, name] : kNames) {
    if (name == token) return k;
  }
  throw ConfigError("unknown activation '" + std::string(token) +
                    "' (expected linear|sigmoid|tanh|rbf_l1|rbf_l2|rbf_linf)");
}

LayerSpec::LayerSpec(std::vector<GroupSpec> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) throw ConfigError("layer has no neuron groups");
  for (const auto& g : groups_) {
    if (g.count == 0) {
      throw ConfigError("neuron group " + std::string(hpelm::to_string(g.kind)) + " has count 0");
    }
  }
}

LayerSpec LayerSpec::parse(std::string_view text) {
  std::vector<GroupSpec> groups;
  while (true) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("combo item '" + std::string(item) + "' is not kind:count");
    }
    const std::string_view count_text = trim(item.substr(colon + 1));
    std::size_t count = 0;
    const auto [ptr, ec] =
        std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc{} || ptr != count_text.data() + count_text.size()) {
      throw ConfigError("combo item '" + std::string(item) + "' has a bad neuron count");
    }
    groups.push_back({parse_activation(item.substr(0, colon)), count});
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return LayerSpec(std::move(groups));
}

std::size_t LayerSpec::total() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.count;
  return n;
}

bool LayerSpec::linear_only() const noexcept {
  return std::all_of(groups_.begin(), groups_.end(),
                     [](const GroupSpec& g) { return g.kind == ActivationKind::linear; });
}

std::string LayerSpec::to_string() const {
  std::string out;
  for (const auto& g : groups_) {
    if (!out.empty()) out += ',';
    out += hpelm::to_string(g.kind);
    out += ':';
    out += std::to_string(g.count);
  }
  return out;
}

std::string LayerSpec::display() const {
  std::string out;
  for (const auto& g : groups_) {
    if (!out.empty()) out += '+';
    out += hpelm::to_string(g.kind);
    out += '(' + std::to_string(g.count) + ')';
  }
  return out;
}

std::size_t NeuronGroup::input_dim() const noexcept {
  return is_rbf(kind) ? centers.cols() : weights.rows();
}

double median_pairwise_distance(ActivationKind kind, const DenseMatrix& sample,
                                std::uint64_t seed) {
  std::vector<std::size_t> rows(sample.rows());
  std::iota(rows.begin(), rows.end(), 0);
  if (rows.size() > kWidthSampleRows) {
    Rng rng(seed);
    for (std::size_t i = 0; i < kWidthSampleRows; ++i) {
      std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
    }
    rows.resize(kWidthSampleRows);
  }
  std::vector<double> dist;
  dist.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      dist.push_back(std::sqrt(squared_distance(kind, sample.row(rows[a]), sample.row(rows[b]))));
    }
  }
  if (dist.empty()) return 1.0;
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  return median > 0.0 ? median : 1.0;
}

std::vector<NeuronGroup> instantiate(const LayerSpec& spec, std::size_t input_dim,
                                     const DenseMatrix& training_sample, std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("instantiate: input dimension must be at least 1");
  std::vector<NeuronGroup> out;
  out.reserve(spec.groups().size());
  for (std::size_t g = 0; g < spec.groups().size(); ++g) {
    const GroupSpec& gs = spec.groups()[g];
    NeuronGroup group;
    group.kind = gs.kind;
    group.count = gs.count;
    if (is_rbf(gs.kind)) {
      if (training_sample.rows() == 0) {
        throw ConfigError("instantiate: rbf group needs a non-empty training sample");
      }
      if (training_sample.cols() != input_dim) {
        throw ShapeError("instantiate: training sample has " +
                         std::to_string(training_sample.cols()) + " columns, expected " +
                         std::to_string(input_dim));
      }
      const double scale =
          median_pairwise_distance(gs.kind, training_sample, derive_seed(seed, {g, kWidthStream}));
      group.centers = DenseMatrix(gs.count, input_dim);
      group.widths.resize(gs.count);
      for (std::size_t j = 0; j < gs.count; ++j) {
        Rng rng(derive_seed(seed, {g, j}));
        auto src = training_sample.row(rng.index(training_sample.rows()));
        std::copy(src.begin(), src.end(), group.centers.row(j).begin());
        // Log-uniform on [scale / 2, 2 · scale].
        group.widths[j] = scale * std::exp2(2.0 * rng.uniform01() - 1.0);
      }
    } else {
      group.weights = DenseMatrix(input_dim, gs.count);
      group.biases.resize(gs.count);
      for (std::size_t j = 0; j < gs.count; ++j) {
        Rng rng(derive_seed(seed, {g, j}));
        for (std::size_t k = 0; k < input_dim; ++k) group.weights(k, j) = rng.uniform(-1.0, 1.0);
        group.biases[j] = rng.uniform(-1.0, 1.0);
      }
    }
    out.push_back(std::move(group));
  }
  return out;
}

DenseMatrix apply(const NeuronGroup& group, const DenseMatrix& x_block) {
  DenseMatrix out(x_block.rows(), group.count);
  apply_into(group, x_block, out, 0);
  return out;
}

DenseMatrix build_hidden(std::span<const NeuronGroup> groups, const DenseMatrix& x_block) {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.count;
  DenseMatrix h(x_block.rows(), total);
  std::size_t col = 0;
  for (const auto& g : groups) {
    apply_into(g, x_block, h, col);
    col += g.count;
  }
  if (!h.all_finite()) throw NumericError("hidden layer produced non-finite activations");
  return h;
}

}  // namespace hpelm
