#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "sppc/linalg.hpp"

namespace sppc {

/// Uniform midtread quantizer: zero is a reproduction level, 2^bits levels
/// spanning [-2^(bits-1) step, (2^(bits-1) - 1) step].
struct QuantizerSpec {
  int bits = 8;
  double step = 0.25;

  void validate() const;
  long long min_index() const;
  long long max_index() const;
  double min_value() const { return double(min_index()) * step; }
  double max_value() const { return double(max_index()) * step; }
};

/// step * round(v / step), half away from zero, saturating at the range ends.
double quantize(const QuantizerSpec& spec, double v);
VectorXd quantize(const QuantizerSpec& spec, const VectorXd& v);

struct EntropyReport {
  double per_sample_entropy = 0.0;  // bits per scalar value
  double per_packet_entropy = 0.0;  // N x per_sample_entropy
  std::size_t zero_count = 0;
  std::size_t total_values = 0;
  std::map<double, std::size_t> histogram;
};

/// Empirical entropy -sum p log2 p of the histogram of `values`.
EntropyReport entropy(std::span<const double> values, std::size_t N);

struct SparsityStats {
  double avg_l0 = 0.0;        // mean count of nonzero entries per packet
  double avg_sparsity = 0.0;  // N - avg_l0
};

SparsityStats sparsity_stats(const std::vector<VectorXd>& packets);

/// All entries of all packets, in packet order.
std::vector<double> flatten(const std::vector<VectorXd>& packets);

}  // namespace sppc
