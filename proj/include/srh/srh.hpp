// Copyright 2026 the srhnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "srh/adam.hpp"
#include "srh/aggregation.hpp"
#include "srh/checkpoint.hpp"
#include "srh/common.hpp"
#include "srh/config.hpp"
#include "srh/cost_sequence.hpp"
#include "srh/data.hpp"
#include "srh/disparity.hpp"
#include "srh/features.hpp"
#include "srh/init.hpp"
#include "srh/layers.hpp"
#include "srh/memory.hpp"
#include "srh/metrics.hpp"
#include "srh/ops.hpp"
#include "srh/pfm.hpp"
#include "srh/pipeline.hpp"
#include "srh/png_io.hpp"
#include "srh/profile.hpp"
#include "srh/synth.hpp"
#include "srh/tape.hpp"
#include "srh/tensor.hpp"
#include "srh/train.hpp"
