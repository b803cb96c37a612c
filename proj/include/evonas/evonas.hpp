// Copyright 2026 The evonas Authors.
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

#pragma once

#include "evonas/cache.hpp"
#include "evonas/channel.hpp"
#include "evonas/commands.hpp"
#include "evonas/config.hpp"
#include "evonas/decoder.hpp"
#include "evonas/error.hpp"
#include "evonas/evaluators.hpp"
#include "evonas/evolution.hpp"
#include "evonas/genome.hpp"
#include "evonas/protocol.hpp"
#include "evonas/random.hpp"
#include "evonas/search.hpp"
