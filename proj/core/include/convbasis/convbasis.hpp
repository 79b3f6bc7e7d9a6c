#pragma once

#include "convbasis/attention.hpp"
#include "convbasis/bench.hpp"
#include "convbasis/conv.hpp"
#include "convbasis/conv_attention.hpp"
#include "convbasis/error.hpp"
#include "convbasis/fft.hpp"
#include "convbasis/fixtures.hpp"
#include "convbasis/gradient.hpp"
#include "convbasis/lowrank.hpp"
#include "convbasis/mask.hpp"
#include "convbasis/matrix.hpp"
#include "convbasis/matrix_io.hpp"
#include "convbasis/recovery.hpp"
