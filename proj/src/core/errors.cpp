// SPDX-License-Identifier: Apache-2.0
#include "core/errors.hpp"

namespace vougc {

const char* errc_name(Errc e) noexcept {
  switch (e) {
    case Errc::parse: return "parse";
    case Errc::semantic: return "semantic";
    case Errc::dimension: return "dimension";
    case Errc::domain: return "domain";
    case Errc::validation: return "validation";
    case Errc::unsupported: return "unsupported";
    case Errc::diffusion: return "diffusion";
    case Errc::singular_equation: return "singular-equation";
    case Errc::no_solution: return "no-solution";
    case Errc::convergence: return "convergence";
    case Errc::not_detectable: return "not-detectable";
    case Errc::consistency: return "consistency";
    case Errc::ill_conditioned: return "ill-conditioned-covariance";
    case Errc::degenerate: return "numerical-degeneracy";
    case Errc::coverage: return "coverage";
    case Errc::divergence: return "divergence";
  }
  return "unknown";
}

}  // namespace vougc
