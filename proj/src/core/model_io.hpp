// SPDX-License-Identifier: Apache-2.0
//
// Text format for VOU models:
//
//   [model]
//   n = 2          # optional; checked against the rows when present
//   [A]
//   -1  1
//    0 -1
//   [Sigma]
//   1 0
//   0 1
//
// Numbers are written in shortest round-trip form, so dump -> parse is exact.
#pragma once

#include <string>
#include <string_view>

#include "core/vou.hpp"

namespace vougc::io {

VouModel parse_model(std::string_view text);
std::string dump_model(const VouModel& model);

/// Shortest decimal that parses back to exactly `v`.
std::string format_exact(double v);

}  // namespace vougc::io
