#pragma once

#include "vlab/corpus.hpp"
#include "vlab/dss.hpp"
#include "vlab/exponent.hpp"
#include "vlab/io.hpp"
#include "vlab/modular.hpp"
#include "vlab/necessity.hpp"
#include "vlab/projection.hpp"
#include "vlab/sequence_lab.hpp"
#include "vlab/series.hpp"
#include "vlab/verdict.hpp"

namespace vlab {
inline constexpr const char* kVersion = "0.1.0";
}
