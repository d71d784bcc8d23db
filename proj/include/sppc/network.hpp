#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sppc {

/// d(k) = 1 when the packet sent at k is lost, 0 when it reaches the buffer.
struct DropoutTrace {
  std::vector<std::uint8_t> d;

  std::size_t length() const { return d.size(); }
  bool dropped(std::size_t k) const { return d.at(k) != 0; }

  /// Parses a string of '0'/'1' characters; surrounding whitespace is ignored.
  static DropoutTrace parse(std::string_view text);
  std::string str() const;

  friend bool operator==(const DropoutTrace&, const DropoutTrace&) = default;
};

enum class ChannelKind { None, Bernoulli, BurstUniform, DeterministicTrace };

std::string_view to_string(ChannelKind kind);
ChannelKind parse_channel_kind(std::string_view s);

inline constexpr std::string_view kRngAlgorithm = "mt19937_64";

struct DropoutModel {
  ChannelKind kind = ChannelKind::None;
  std::uint64_t seed = 0;
  double p = 0.0;        // Bernoulli loss probability
  std::uint32_t lo = 1;  // burst length range, inclusive
  std::uint32_t hi = 4;
  DropoutTrace trace;    // DeterministicTrace only

  void validate() const;

  static DropoutModel none() { return {}; }
  static DropoutModel bernoulli(double p, std::uint64_t seed);
  static DropoutModel burst_uniform(std::uint32_t lo, std::uint32_t hi, std::uint64_t seed);
  static DropoutModel deterministic(DropoutTrace trace);

  std::string describe() const;
};

/// Burst-uniform traces start with a reception, then alternate a burst of
/// m ~ Uniform{lo..hi} losses with a single reception.
DropoutTrace generate_trace(const DropoutModel& model, std::size_t length);

/// Instants k with d(k) = 0.
std::vector<std::size_t> reception_instants(const DropoutTrace& trace);

/// m_i = k_{i+1} - k_i - 1 between successive receptions. Empty when fewer
/// than two receptions exist.
std::vector<std::size_t> consecutive_dropouts(const DropoutTrace& trace);

/// Inverse of consecutive_dropouts: k0 leading losses, a reception, then each
/// gap followed by a reception, padded with losses to `length`.
DropoutTrace synthesize_trace(std::size_t k0, const std::vector<std::size_t>& gaps, std::size_t length);

/// True iff every m_i <= N - 1.
bool check_assumption1(const DropoutTrace& trace, std::size_t N);

DropoutTrace load_trace_file(const std::filesystem::path& path);
void save_trace_file(const std::filesystem::path& path, const DropoutTrace& trace);

}  // namespace sppc
