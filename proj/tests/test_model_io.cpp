// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "core/errors.hpp"
#include "core/model_io.hpp"
#include "support/oracles.hpp"

using namespace vougc;
namespace ts = testing_support;

TEST_CASE("model text round trip is exact") {
  ts::Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 5;
    Matrix a = ts::random_drift(n, rng);
    a(0, 0) *= 1e-300;  // subnormal-adjacent magnitudes
    const VouModel m = VouModel::create(a, ts::random_spd(n, rng));
    const VouModel back = io::parse_model(io::dump_model(m));
    CHECK(back.A() == m.A());
    CHECK(back.Sigma() == m.Sigma());
  }
  for (double v : {0.1, 1.0 / 3.0, -2.5e-310, 1e300, 0.0, -0.0}) {
    CHECK(std::strtod(io::format_exact(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("model documents") {
  const VouModel m = io::parse_model("# comment\n[A]\n-1 1  # trailing\n0 -1\n\n[Sigma]\n1 0\n0 1\n");
  CHECK(m.dim() == 2);
  CHECK(m.A()(0, 1) == 1.0);
}

TEST_CASE("model document errors") {
  auto fails = [](const char* text) -> std::pair<Errc, std::size_t> {
    try {
      io::parse_model(text);
    } catch (const ParseError& e) {
      return {e.code(), e.line()};
    } catch (const Error& e) {
      return {e.code(), 0};
    }
    return {Errc::parse, 9999};
  };
  CHECK(fails("[A]\n-1 x\n[Sigma]\n1\n").second == 2);
  CHECK(fails("[A]\n-1 0\n0\n[Sigma]\n1 0\n0 1\n").second == 3);
  CHECK(fails("[model]\nn = 3\n[A]\n-1 0\n0 -1\n[Sigma]\n1 0\n0 1\n").first == Errc::semantic);
  CHECK(fails("[A]\n-1\n").first == Errc::semantic);
  CHECK(fails("[B]\n1\n").second == 1);
  CHECK(fails("[A]\n-1\n[Sigma]\n-1\n").first == Errc::ill_conditioned);
}
