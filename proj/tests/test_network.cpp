#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "sppc/errors.hpp"
#include "sppc/network.hpp"

using namespace sppc;

namespace {
using Gaps = std::vector<std::size_t>;
}

TEST_CASE("trace parsing and printing") {
  const auto t = DropoutTrace::parse(" 0110\n");
  CHECK(t.length() == 4);
  CHECK(t.dropped(1));
  CHECK_FALSE(t.dropped(0));
  CHECK(t.str() == "0110");
  CHECK_THROWS_AS(DropoutTrace::parse("01x"), ConfigError);
}

TEST_CASE("channel kinds") {
  CHECK(generate_trace(DropoutModel::none(), 5).str() == "00000");
  CHECK(generate_trace(DropoutModel::burst_uniform(1, 1, 3), 6).str() == "010101");
  CHECK(generate_trace(DropoutModel::burst_uniform(2, 2, 3), 7).str() == "0110110");
  CHECK(generate_trace(DropoutModel::bernoulli(1.0, 1), 4).str() == "1111");
  CHECK(generate_trace(DropoutModel::bernoulli(0.0, 1), 4).str() == "0000");
  CHECK(generate_trace(DropoutModel::deterministic(DropoutTrace::parse("01101")), 3).str() == "011");
  CHECK_THROWS_AS(generate_trace(DropoutModel::deterministic(DropoutTrace::parse("01")), 3), ContractViolation);
  CHECK_THROWS_AS(generate_trace(DropoutModel::none(), 0), ContractViolation);
  CHECK_THROWS_AS(DropoutModel::burst_uniform(3, 2, 0), ConfigError);
  CHECK_THROWS_AS(DropoutModel::bernoulli(1.5, 0), ConfigError);
  for (auto k : {ChannelKind::None, ChannelKind::Bernoulli, ChannelKind::BurstUniform, ChannelKind::DeterministicTrace})
    CHECK(parse_channel_kind(to_string(k)) == k);
}

TEST_CASE("burst-uniform statistics") {
  const auto t = generate_trace(DropoutModel::burst_uniform(1, 4, 42), 400000);
  auto gaps = consecutive_dropouts(t);
  REQUIRE(gaps.size() >= 100000);
  gaps.resize(100000);
  const double mean = double(std::accumulate(gaps.begin(), gaps.end(), std::size_t{0})) / double(gaps.size());
  CHECK(mean == doctest::Approx(2.5).epsilon(0.02 / 2.5));
  CHECK(*std::min_element(gaps.begin(), gaps.end()) == 1);
  CHECK(*std::max_element(gaps.begin(), gaps.end()) == 4);
  CHECK_FALSE(t.dropped(0));
  CHECK(check_assumption1(t, 5));
  CHECK_FALSE(check_assumption1(t, 4));
}

TEST_CASE("bernoulli loss rate") {
  const auto t = generate_trace(DropoutModel::bernoulli(0.3, 9), 200000);
  const double rate = double(std::count(t.d.begin(), t.d.end(), 1)) / double(t.length());
  CHECK(rate == doctest::Approx(0.3).epsilon(0.01 / 0.3));
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate_trace(DropoutModel::burst_uniform(1, 4, 7), 1000);
  CHECK(a == generate_trace(DropoutModel::burst_uniform(1, 4, 7), 1000));
  CHECK_FALSE(a == generate_trace(DropoutModel::burst_uniform(1, 4, 8), 1000));
  const auto b = generate_trace(DropoutModel::bernoulli(0.4, 7), 1000);
  CHECK(b == generate_trace(DropoutModel::bernoulli(0.4, 7), 1000));
}

TEST_CASE("consecutive dropouts") {
  CHECK(consecutive_dropouts(DropoutTrace::parse("000")) == Gaps{0, 0});
  CHECK(consecutive_dropouts(DropoutTrace::parse("0110")) == Gaps{2});
  CHECK(consecutive_dropouts(DropoutTrace::parse("0101110")) == Gaps{1, 3});
  CHECK(consecutive_dropouts(DropoutTrace::parse("1110")).empty());
  CHECK(consecutive_dropouts(DropoutTrace::parse("111")).empty());
  CHECK(reception_instants(DropoutTrace::parse("10100")) == Gaps{1, 3, 4});
}

TEST_CASE("synthesize inverts consecutive_dropouts") {
  CHECK(synthesize_trace(0, {1, 3}, 7).str() == "0101110");
  CHECK(synthesize_trace(2, {0}, 6).str() == "110011");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = generate_trace(DropoutModel::burst_uniform(0, 3, seed), 200);
    // the generator may end inside a burst; cut back to the last reception
    auto trimmed = t;
    const auto ks = reception_instants(t);
    trimmed.d.resize(ks.back() + 1);
    CHECK(synthesize_trace(0, consecutive_dropouts(trimmed), trimmed.length()) == trimmed);
  }
  CHECK_THROWS_AS(synthesize_trace(0, {5}, 3), ContractViolation);
}

TEST_CASE("assumption 1") {
  CHECK(check_assumption1(DropoutTrace::parse("0000"), 1));
  CHECK(check_assumption1(DropoutTrace::parse("01100"), 3));
  CHECK_FALSE(check_assumption1(DropoutTrace::parse("01100"), 2));
  CHECK(check_assumption1(DropoutTrace::parse("1"), 1));
}

TEST_CASE("trace files round-trip") {
  const auto path = std::filesystem::temp_directory_path() / "sppc_trace_test.txt";
  const auto t = DropoutTrace::parse("0110100");
  save_trace_file(path, t);
  CHECK(load_trace_file(path) == t);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_trace_file(path), ConfigError);
}
