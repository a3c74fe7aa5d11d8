/*
 * Copyright 2026 The jointgl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "jointgl/admm.hpp"
#include "jointgl/core.hpp"
#include "jointgl/gaussianize.hpp"
#include "jointgl/glasso_reference.hpp"
#include "jointgl/inference.hpp"
#include "jointgl/io.hpp"
#include "jointgl/model_selection.hpp"
#include "jointgl/pipeline.hpp"
#include "jointgl/priors.hpp"
#include "jointgl/random.hpp"
#include "jointgl/synthgen.hpp"
