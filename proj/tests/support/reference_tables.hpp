// Copyright 2026 The predsafe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Published benchmark rows (errors in meters) used as fixtures.

#ifndef PREDSAFE_TESTS__REFERENCE_TABLES_HPP_
#define PREDSAFE_TESTS__REFERENCE_TABLES_HPP_

#include <array>
#include <string_view>

namespace predsafe::testing
{

struct ReferenceRow
{
  std::string_view label;
  double ade_o, ade_w, fde_o, fde_w;
  double mie_a, mie_f;  // as printed
};

// Per density level: single, few, medium, many.
inline constexpr std::array<ReferenceRow, 4> kDensityRows = {{
  {"single", 2.2402, 2.0743, 5.1576, 4.6749, 0.1153, 0.2241},
  {"few", 2.1612, 2.0224, 4.7180, 4.2950, 0.0972, 0.2041},
  {"medium", 1.9751, 1.8587, 4.1527, 3.8803, 0.0853, 0.1386},
  {"many", 1.9809, 1.8181, 4.1722, 3.7113, 0.1206, 0.2401},
}};

// Per road geometry: straight, curved.
inline constexpr std::array<ReferenceRow, 2> kGeometryRows = {{
  {"straight", 1.9493, 1.8238, 4.1516, 3.8061, 0.0929, 0.1771},
  {"curved", 2.4259, 2.2624, 5.4093, 4.9716, 0.1087, 0.1963},
}};

// Whole corpus.
inline constexpr ReferenceRow kOverallRow = {"overall", 1.9754, 1.8558, 4.2051, 3.8892, 0.0807, 0.1622};

}  // namespace predsafe::testing

#endif  // PREDSAFE_TESTS__REFERENCE_TABLES_HPP_
