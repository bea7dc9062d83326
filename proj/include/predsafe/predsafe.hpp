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

#ifndef PREDSAFE__PREDSAFE_HPP_
#define PREDSAFE__PREDSAFE_HPP_

#include "predsafe/classify.hpp"
#include "predsafe/config.hpp"
#include "predsafe/ingest.hpp"
#include "predsafe/metrics.hpp"
#include "predsafe/report.hpp"
#include "predsafe/scene_model.hpp"
#include "predsafe/synth.hpp"

#endif  // PREDSAFE__PREDSAFE_HPP_
