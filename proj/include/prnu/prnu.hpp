// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fft.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/harness.hpp"
#include "prnu/image.hpp"
#include "prnu/ispsim.hpp"
#include "prnu/localization.hpp"
#include "prnu/matching.hpp"
#include "prnu/parallel.hpp"
