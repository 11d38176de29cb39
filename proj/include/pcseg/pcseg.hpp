/* Copyright 2026 The pcseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include "pcseg/augment.hpp"
#include "pcseg/checkpoint.hpp"
#include "pcseg/cloud.hpp"
#include "pcseg/config.hpp"
#include "pcseg/crf.hpp"
#include "pcseg/error.hpp"
#include "pcseg/experiment.hpp"
#include "pcseg/fcnn.hpp"
#include "pcseg/metrics.hpp"
#include "pcseg/ops.hpp"
#include "pcseg/optim.hpp"
#include "pcseg/permutohedral.hpp"
#include "pcseg/synth.hpp"
#include "pcseg/tape.hpp"
#include "pcseg/tensor.hpp"
#include "pcseg/train.hpp"
#include "pcseg/trilinear.hpp"
#include "pcseg/voxelizer.hpp"
