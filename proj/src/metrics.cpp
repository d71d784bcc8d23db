#include "sppc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sppc/errors.hpp"

namespace sppc {

void QuantizerSpec::validate() const {
  if (bits < 1 || bits > 52) throw ConfigError("quantizer: bits must lie in [1, 52]");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("quantizer: step must be > 0");
}

long long QuantizerSpec::min_index() const { return -(1LL << (bits - 1)); }
long long QuantizerSpec::max_index() const { return (1LL << (bits - 1)) - 1; }

double quantize(const QuantizerSpec& spec, double v) {
  spec.validate();
  const double scaled = v / spec.step;
  if (scaled <= double(spec.min_index())) return spec.min_value();
  if (scaled >= double(spec.max_index())) return spec.max_value();
  const long long index = std::llround(scaled);  // halfway cases away from zero
  return double(index) * spec.step;
}

VectorXd quantize(const QuantizerSpec& spec, const VectorXd& v) {
  return v.unaryExpr([&spec](double e) { return quantize(spec, e); });
}

EntropyReport entropy(std::span<const double> values, std::size_t N) {
  SPPC_EXPECT(!values.empty(), "entropy: no values");
  EntropyReport rep;
  rep.total_values = values.size();
  for (double v : values) {
    ++rep.histogram[v == 0.0 ? 0.0 : v];  // folds -0.0 into 0.0
    if (v == 0.0) ++rep.zero_count;
  }
  const double total = double(rep.total_values);
  double h = 0.0;
  for (const auto& [level, count] : rep.histogram) {
    const double p = double(count) / total;
    h -= p * std::log2(p);
  }
  rep.per_sample_entropy = std::max(0.0, h);
  rep.per_packet_entropy = double(N) * rep.per_sample_entropy;
  return rep;
}

SparsityStats sparsity_stats(const std::vector<VectorXd>& packets) {
  SPPC_EXPECT(!packets.empty(), "sparsity_stats: no packets");
  const auto N = packets.front().size();
  double nonzeros = 0.0;
  for (const auto& U : packets) {
    SPPC_EXPECT(U.size() == N, "sparsity_stats: packets differ in length");
    nonzeros += double((U.array() != 0.0).count());
  }
  SparsityStats s;
  s.avg_l0 = nonzeros / double(packets.size());
  s.avg_sparsity = double(N) - s.avg_l0;
  return s;
}

std::vector<double> flatten(const std::vector<VectorXd>& packets) {
  std::vector<double> out;
  for (const auto& U : packets) out.insert(out.end(), U.data(), U.data() + U.size());
  return out;
}

}  // namespace sppc
