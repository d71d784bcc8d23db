#include "sppc/network.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "sppc/errors.hpp"

namespace sppc {

DropoutTrace DropoutTrace::parse(std::string_view text) {
  DropoutTrace t;
  for (char ch : text) {
    if (ch == '0' || ch == '1')
      t.d.push_back(static_cast<std::uint8_t>(ch - '0'));
    else if (!std::isspace(static_cast<unsigned char>(ch)))
      throw ConfigError(std::string("trace: unexpected character '") + ch + "'");
  }
  return t;
}

std::string DropoutTrace::str() const {
  std::string s;
  s.reserve(d.size());
  for (auto bit : d) s.push_back(bit ? '1' : '0');
  return s;
}

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::None: return "none";
    case ChannelKind::Bernoulli: return "bernoulli";
    case ChannelKind::BurstUniform: return "burst-uniform";
    case ChannelKind::DeterministicTrace: return "deterministic-trace";
  }
  return "?";
}

ChannelKind parse_channel_kind(std::string_view s) {
  if (s == "none") return ChannelKind::None;
  if (s == "bernoulli") return ChannelKind::Bernoulli;
  if (s == "burst-uniform") return ChannelKind::BurstUniform;
  if (s == "deterministic-trace") return ChannelKind::DeterministicTrace;
  throw ConfigError("unknown channel kind '" + std::string(s) + "'");
}

void DropoutModel::validate() const {
  if (kind == ChannelKind::Bernoulli && !(p >= 0.0 && p <= 1.0))
    throw ConfigError("channel: bernoulli p must lie in [0, 1]");
  if (kind == ChannelKind::BurstUniform && lo > hi)
    throw ConfigError("channel: burst range requires lo <= hi");
}

DropoutModel DropoutModel::bernoulli(double p, std::uint64_t seed) {
  DropoutModel m;
  m.kind = ChannelKind::Bernoulli;
  m.p = p;
  m.seed = seed;
  m.validate();
  return m;
}

DropoutModel DropoutModel::burst_uniform(std::uint32_t lo, std::uint32_t hi, std::uint64_t seed) {
  DropoutModel m;
  m.kind = ChannelKind::BurstUniform;
  m.lo = lo;
  m.hi = hi;
  m.seed = seed;
  m.validate();
  return m;
}

DropoutModel DropoutModel::deterministic(DropoutTrace trace) {
  DropoutModel m;
  m.kind = ChannelKind::DeterministicTrace;
  m.trace = std::move(trace);
  return m;
}

std::string DropoutModel::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case ChannelKind::Bernoulli: os << "(p=" << p << ", seed=" << seed << ")"; break;
    case ChannelKind::BurstUniform: os << "(" << lo << "," << hi << ", seed=" << seed << ")"; break;
    case ChannelKind::DeterministicTrace: os << "(length=" << trace.length() << ")"; break;
    case ChannelKind::None: break;
  }
  return os.str();
}

DropoutTrace generate_trace(const DropoutModel& model, std::size_t length) {
  SPPC_EXPECT(length >= 1, "generate_trace: length must be >= 1");
  model.validate();
  DropoutTrace t;
  t.d.reserve(length);
  switch (model.kind) {
    case ChannelKind::None:
      t.d.assign(length, 0);
      break;
    case ChannelKind::Bernoulli: {
      std::mt19937_64 rng(model.seed);
      std::bernoulli_distribution loss(model.p);
      for (std::size_t k = 0; k < length; ++k) t.d.push_back(loss(rng) ? 1 : 0);
      break;
    }
    case ChannelKind::BurstUniform: {
      std::mt19937_64 rng(model.seed);
      std::uniform_int_distribution<std::uint32_t> burst(model.lo, model.hi);
      t.d.push_back(0);
      while (t.d.size() < length) {
        const std::uint32_t m = burst(rng);
        for (std::uint32_t j = 0; j < m && t.d.size() < length; ++j) t.d.push_back(1);
        if (t.d.size() < length) t.d.push_back(0);
      }
      break;
    }
    case ChannelKind::DeterministicTrace:
      SPPC_EXPECT(model.trace.length() >= length, "generate_trace: deterministic trace shorter than requested length");
      t.d.assign(model.trace.d.begin(), model.trace.d.begin() + static_cast<std::ptrdiff_t>(length));
      break;
  }
  return t;
}

std::vector<std::size_t> reception_instants(const DropoutTrace& trace) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 0; k < trace.length(); ++k)
    if (!trace.dropped(k)) ks.push_back(k);
  return ks;
}

std::vector<std::size_t> consecutive_dropouts(const DropoutTrace& trace) {
  const auto ks = reception_instants(trace);
  std::vector<std::size_t> gaps;
  for (std::size_t i = 1; i < ks.size(); ++i) gaps.push_back(ks[i] - ks[i - 1] - 1);
  return gaps;
}

DropoutTrace synthesize_trace(std::size_t k0, const std::vector<std::size_t>& gaps, std::size_t length) {
  DropoutTrace t;
  t.d.assign(k0, 1);
  t.d.push_back(0);
  for (auto m : gaps) {
    t.d.insert(t.d.end(), m, 1);
    t.d.push_back(0);
  }
  SPPC_EXPECT(t.d.size() <= length, "synthesize_trace: gaps do not fit in the requested length");
  t.d.resize(length, 1);
  return t;
}

bool check_assumption1(const DropoutTrace& trace, std::size_t N) {
  const auto gaps = consecutive_dropouts(trace);
  return std::all_of(gaps.begin(), gaps.end(), [N](std::size_t m) { return m + 1 <= N; });
}

DropoutTrace load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trace: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  auto t = DropoutTrace::parse(line);
  if (t.length() == 0) throw ConfigError("trace: empty trace file " + path.string());
  return t;
}

void save_trace_file(const std::filesystem::path& path, const DropoutTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("trace: cannot write " + path.string());
  out << trace.str() << '\n';
}

}  // namespace sppc
